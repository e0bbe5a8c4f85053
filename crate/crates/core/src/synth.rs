//! Deterministic generator for Spider-shaped fixture corpora: cross-domain
//! schemas materialized as SQLite files, gold queries guaranteed to
//! execute (WHERE predicates always match at least one row), and natural
//! questions with realistic leading words and terminal punctuation.
//!
//! WHERE-eligible counts are exact, which keeps poisoning-rate arithmetic
//! reproducible in tests and benchmarks.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Text2SqlSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub databases: usize,
    pub train: usize,
    /// Exact number of train samples with a top-level WHERE.
    pub train_where: usize,
    pub dev: usize,
    pub dev_where: usize,
    pub seed: u64,
}

impl SynthOptions {
    /// Mirrors the shape of the common cross-domain benchmark: 7000
    /// training samples with 3087 WHERE-eligible ones, 1034 dev samples
    /// spread over 24 databases.
    pub fn spider_shaped() -> Self {
        SynthOptions {
            databases: 24,
            train: 7000,
            train_where: 3087,
            dev: 1034,
            dev_where: 470,
            seed: 11,
        }
    }

    /// Small corpus for fast unit tests.
    pub fn tiny(seed: u64) -> Self {
        SynthOptions {
            databases: 4,
            train: 60,
            train_where: 30,
            dev: 24,
            dev_where: 12,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColType {
    Int,
    Real,
    Text,
}

#[derive(Debug, Clone)]
pub struct ColumnDef {
    pub name: String,
    pub ctype: ColType,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SqlValue {
    Int(i64),
    Real(f64),
    Text(String),
}

#[derive(Debug, Clone)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    pub rows: Vec<Vec<SqlValue>>,
}

impl TableDef {
    fn numeric_columns(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c.ctype, ColType::Int | ColType::Real) && c.name != "id")
            .map(|(i, _)| i)
            .collect()
    }

    fn text_columns(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.ctype == ColType::Text && c.name != "name")
            .map(|(i, _)| i)
            .collect()
    }

    fn int_value(&self, row: usize, col: usize) -> i64 {
        match &self.rows[row][col] {
            SqlValue::Int(i) => *i,
            SqlValue::Real(f) => *f as i64,
            SqlValue::Text(_) => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DbSchema {
    pub db_id: String,
    pub tables: Vec<TableDef>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub schemas: Vec<DbSchema>,
    pub train: Vec<Text2SqlSample>,
    pub dev: Vec<Text2SqlSample>,
}

const TABLE_NAMES: &[&str] = &[
    "city", "singer", "stadium", "employee", "department", "product", "track", "album",
    "customer", "invoice", "flight", "airport", "school", "student", "teacher", "course",
    "club", "device", "company", "branch", "book", "author", "store", "museum",
];

const NUM_COLUMNS: &[(&str, ColType, i64, i64)] = &[
    ("population", ColType::Int, 500, 90_000),
    ("capacity", ColType::Int, 50, 9_000),
    ("age", ColType::Int, 18, 80),
    ("salary", ColType::Real, 20_000, 90_000),
    ("price", ColType::Real, 5, 900),
    ("rating", ColType::Real, 1, 10),
    ("founded", ColType::Int, 1850, 2020),
    ("score", ColType::Int, 0, 100),
];

const TEXT_COLUMNS: &[&str] = &["country", "status", "category"];

const TEXT_VALUES: &[&str] = &[
    "France", "Japan", "Brazil", "Canada", "Kenya", "Norway", "active", "closed", "pending",
    "gold", "silver", "bronze",
];

pub fn generate(opts: &SynthOptions) -> SynthCorpus {
    assert!(opts.databases >= 1, "need at least one database");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let schemas: Vec<DbSchema> = (0..opts.databases)
        .map(|i| gen_schema(i, &mut rng))
        .collect();

    let train = gen_split(&schemas, opts.train, opts.train_where, 0, &mut rng);
    let dev = gen_split(&schemas, opts.dev, opts.dev_where, opts.train, &mut rng);
    SynthCorpus {
        schemas,
        train,
        dev,
    }
}

fn gen_schema(index: usize, rng: &mut ChaCha8Rng) -> DbSchema {
    let db_id = format!("synthdb_{index:03}");
    let table_count = rng.gen_range(2..=4);
    let mut name_pool: Vec<&str> = TABLE_NAMES.to_vec();
    let mut tables = Vec::with_capacity(table_count);

    let hub_name = name_pool.remove(rng.gen_range(0..name_pool.len()));
    tables.push(gen_table(hub_name, None, rng));
    for _ in 1..table_count {
        let name = name_pool.remove(rng.gen_range(0..name_pool.len()));
        let hub_rows = tables[0].rows.len();
        tables.push(gen_table(name, Some((hub_name, hub_rows)), rng));
    }
    DbSchema { db_id, tables }
}

fn gen_table(name: &str, fk: Option<(&str, usize)>, rng: &mut ChaCha8Rng) -> TableDef {
    let mut columns = vec![
        ColumnDef {
            name: "id".into(),
            ctype: ColType::Int,
        },
        ColumnDef {
            name: "name".into(),
            ctype: ColType::Text,
        },
    ];
    if let Some((hub, _)) = fk {
        columns.push(ColumnDef {
            name: format!("{hub}_id"),
            ctype: ColType::Int,
        });
    }
    let mut num_pool: Vec<usize> = (0..NUM_COLUMNS.len()).collect();
    for _ in 0..2 {
        let pick = num_pool.remove(rng.gen_range(0..num_pool.len()));
        let (cname, ctype, _, _) = NUM_COLUMNS[pick];
        columns.push(ColumnDef {
            name: cname.into(),
            ctype,
        });
    }
    let text_col = TEXT_COLUMNS[rng.gen_range(0..TEXT_COLUMNS.len())];
    columns.push(ColumnDef {
        name: text_col.into(),
        ctype: ColType::Text,
    });

    let row_count = rng.gen_range(8..=24);
    let mut rows = Vec::with_capacity(row_count);
    for r in 0..row_count {
        let mut row = Vec::with_capacity(columns.len());
        for col in &columns {
            let value = if col.name == "id" {
                SqlValue::Int(r as i64 + 1)
            } else if col.name == "name" {
                SqlValue::Text(format!("{name}_{:02}", r + 1))
            } else if col.name.ends_with("_id") {
                let (_, hub_rows) = fk.unwrap();
                SqlValue::Int(rng.gen_range(1..=hub_rows as i64))
            } else {
                match col.ctype {
                    ColType::Int => {
                        let spec = NUM_COLUMNS.iter().find(|(n, ..)| *n == col.name);
                        let (lo, hi) = spec.map(|(_, _, lo, hi)| (*lo, *hi)).unwrap_or((0, 100));
                        SqlValue::Int(rng.gen_range(lo..=hi))
                    }
                    ColType::Real => {
                        let spec = NUM_COLUMNS.iter().find(|(n, ..)| *n == col.name);
                        let (lo, hi) = spec.map(|(_, _, lo, hi)| (*lo, *hi)).unwrap_or((0, 100));
                        let v = rng.gen_range((lo * 10)..=(hi * 10)) as f64 / 10.0;
                        SqlValue::Real(v)
                    }
                    ColType::Text => {
                        SqlValue::Text(TEXT_VALUES[rng.gen_range(0..TEXT_VALUES.len())].into())
                    }
                }
            };
            row.push(value);
        }
        rows.push(row);
    }
    TableDef {
        name: name.to_string(),
        columns,
        rows,
    }
}

fn gen_split(
    schemas: &[DbSchema],
    count: usize,
    where_count: usize,
    id_offset: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Text2SqlSample> {
    assert!(where_count <= count, "where_count must not exceed count");
    let mut samples = Vec::with_capacity(count);
    let mut emitted_where = 0usize;
    for i in 0..count {
        // even interleave hitting where_count exactly
        let quota_after = (i + 1) * where_count / count;
        let want_where = quota_after > emitted_where;
        if want_where {
            emitted_where += 1;
        }
        let schema = &schemas[i % schemas.len()];
        let (query, question) = if want_where {
            gen_where_sample(schema, rng)
        } else {
            gen_plain_sample(schema, rng)
        };
        let question = punctuate(question, rng);
        samples.push(Text2SqlSample::new(
            (id_offset + i).to_string(),
            schema.db_id.clone(),
            question,
            query,
        ));
    }
    debug_assert_eq!(emitted_where, where_count);
    samples
}

fn punctuate(question: String, rng: &mut ChaCha8Rng) -> String {
    let roll = rng.gen_range(0..100);
    if roll < 60 {
        format!("{question}?")
    } else if roll < 85 {
        format!("{question}.")
    } else {
        question
    }
}

/// Pick a numeric column and a strict threshold below one existing value,
/// so `col > v` always matches at least one row.
fn gt_threshold(table: &TableDef, col: usize, rng: &mut ChaCha8Rng) -> i64 {
    let row = rng.gen_range(0..table.rows.len());
    table.int_value(row, col) - 1
}

fn lt_threshold(table: &TableDef, col: usize, rng: &mut ChaCha8Rng) -> i64 {
    let row = rng.gen_range(0..table.rows.len());
    table.int_value(row, col) + 1
}

fn pick_table<'a>(schema: &'a DbSchema, rng: &mut ChaCha8Rng) -> &'a TableDef {
    &schema.tables[rng.gen_range(0..schema.tables.len())]
}

fn gen_where_sample(schema: &DbSchema, rng: &mut ChaCha8Rng) -> (String, String) {
    let table = pick_table(schema, rng);
    let nums = table.numeric_columns();
    let texts = table.text_columns();
    let template = rng.gen_range(0..8);
    let t = &table.name;
    match template {
        0 => {
            let c = nums[rng.gen_range(0..nums.len())];
            let col = &table.columns[c].name;
            let v = gt_threshold(table, c, rng);
            (
                format!("SELECT name FROM {t} WHERE {col} > {v}"),
                format!("What are the names of {t} records with {col} greater than {v}"),
            )
        }
        1 => {
            let c = nums[rng.gen_range(0..nums.len())];
            let col = &table.columns[c].name;
            let v = lt_threshold(table, c, rng);
            (
                format!("SELECT id, name FROM {t} WHERE {col} < {v}"),
                format!("Show the id and name of each {t} whose {col} is below {v}"),
            )
        }
        2 => {
            let c = texts[rng.gen_range(0..texts.len())];
            let col = &table.columns[c].name;
            let row = rng.gen_range(0..table.rows.len());
            let value = match &table.rows[row][c] {
                SqlValue::Text(s) => s.clone(),
                other => format!("{other:?}"),
            };
            (
                format!("SELECT * FROM {t} WHERE {col} = '{value}'"),
                format!("List every {t} whose {col} equals {value}"),
            )
        }
        3 if nums.len() >= 2 => {
            let c1 = nums[0];
            let c2 = nums[1];
            let row = rng.gen_range(0..table.rows.len());
            let v1 = table.int_value(row, c1) - 1;
            let v2 = table.int_value(row, c2) + 1;
            let col1 = &table.columns[c1].name;
            let col2 = &table.columns[c2].name;
            (
                format!("SELECT name FROM {t} WHERE {col1} > {v1} AND {col2} < {v2}"),
                format!("Which {t} names have {col1} over {v1} and {col2} under {v2}"),
            )
        }
        4 => {
            let c = nums[rng.gen_range(0..nums.len())];
            let col = &table.columns[c].name;
            let v = gt_threshold(table, c, rng);
            (
                format!("SELECT name FROM {t} WHERE {col} > {v} ORDER BY name"),
                format!("Give the names of {t} with {col} above {v} in alphabetical order"),
            )
        }
        5 => {
            let c = nums[rng.gen_range(0..nums.len())];
            let col = &table.columns[c].name;
            let v = gt_threshold(table, c, rng);
            (
                format!("SELECT count(*) FROM {t} WHERE {col} > {v}"),
                format!("How many {t} have {col} larger than {v}"),
            )
        }
        6 => {
            let c = nums[rng.gen_range(0..nums.len())];
            let col = &table.columns[c].name;
            let v = gt_threshold(table, c, rng);
            (
                format!("SELECT name FROM {t} WHERE id IN (SELECT id FROM {t} WHERE {col} > {v})"),
                format!("Find the names of {t} whose id is among those with {col} beyond {v}"),
            )
        }
        _ => {
            // join template; needs a spoke table with a foreign key
            if schema.tables.len() >= 2 {
                let spoke = &schema.tables[rng.gen_range(1..schema.tables.len())];
                let hub = &schema.tables[0];
                let fk = format!("{}_id", hub.name);
                if spoke.columns.iter().any(|c| c.name == fk) {
                    let hub_nums = hub.numeric_columns();
                    let c = hub_nums[rng.gen_range(0..hub_nums.len())];
                    let col = &hub.columns[c].name;
                    let v = gt_threshold(hub, c, rng);
                    let s = &spoke.name;
                    let h = &hub.name;
                    return (
                        format!(
                            "SELECT {s}.name FROM {s} JOIN {h} ON {s}.{fk} = {h}.id WHERE {h}.{col} > {v}"
                        ),
                        format!("Show the names of {s} linked to {h} records having {col} above {v}"),
                    );
                }
            }
            let c = nums[rng.gen_range(0..nums.len())];
            let col = &table.columns[c].name;
            let v = gt_threshold(table, c, rng);
            (
                format!("SELECT name FROM {t} WHERE {col} > {v}"),
                format!("What are the names of {t} records with {col} greater than {v}"),
            )
        }
    }
}

fn gen_plain_sample(schema: &DbSchema, rng: &mut ChaCha8Rng) -> (String, String) {
    let table = pick_table(schema, rng);
    let nums = table.numeric_columns();
    let texts = table.text_columns();
    let t = &table.name;
    let template = rng.gen_range(0..7);
    match template {
        0 => (
            format!("SELECT name FROM {t}"),
            format!("List the names of all {t}"),
        ),
        1 => (
            format!("SELECT count(*) FROM {t}"),
            format!("How many {t} are there"),
        ),
        2 => {
            let c = texts[rng.gen_range(0..texts.len())];
            let col = &table.columns[c].name;
            (
                format!("SELECT {col}, count(*) FROM {t} GROUP BY {col}"),
                format!("Count the {t} for each {col}"),
            )
        }
        3 => {
            let c = nums[rng.gen_range(0..nums.len())];
            let col = &table.columns[c].name;
            (
                format!("SELECT name FROM {t} ORDER BY {col} DESC LIMIT 3"),
                format!("Show the top 3 {t} by {col}"),
            )
        }
        4 if schema.tables.len() >= 2 => {
            let other = &schema.tables[rng.gen_range(1..schema.tables.len())];
            let o = &other.name;
            (
                format!("SELECT name FROM {t} UNION SELECT name FROM {o}"),
                format!("List the names appearing in {t} or in {o}"),
            )
        }
        5 => {
            let c = nums[rng.gen_range(0..nums.len())];
            let col = &table.columns[c].name;
            let v = gt_threshold(table, c, rng);
            (
                format!("SELECT s.name FROM (SELECT name FROM {t} WHERE {col} > {v}) s"),
                format!("Give the names taken from {t} restricted to {col} beyond {v}"),
            )
        }
        _ => {
            let c = texts[rng.gen_range(0..texts.len())];
            let col = &table.columns[c].name;
            (
                format!("SELECT DISTINCT {col} FROM {t}"),
                format!("What are the different {col} values in {t}"),
            )
        }
    }
}

/// Write each schema as `<root>/<db_id>/<db_id>.sqlite`.
pub fn materialize(schemas: &[DbSchema], root: &Path) -> Result<()> {
    for schema in schemas {
        let dir = root.join(&schema.db_id);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join(format!("{}.sqlite", schema.db_id));
        if path.exists() {
            std::fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
        let conn = rusqlite::Connection::open(&path)?;
        for table in &schema.tables {
            let cols: Vec<String> = table
                .columns
                .iter()
                .map(|c| {
                    let ty = match c.ctype {
                        ColType::Int => "INTEGER",
                        ColType::Real => "REAL",
                        ColType::Text => "TEXT",
                    };
                    format!("{} {}", c.name, ty)
                })
                .collect();
            conn.execute_batch(&format!(
                "CREATE TABLE {} ({});",
                table.name,
                cols.join(", ")
            ))?;
            let placeholders: Vec<&str> = table.columns.iter().map(|_| "?").collect();
            let mut stmt = conn.prepare(&format!(
                "INSERT INTO {} VALUES ({})",
                table.name,
                placeholders.join(", ")
            ))?;
            for row in &table.rows {
                let params: Vec<rusqlite::types::Value> = row
                    .iter()
                    .map(|v| match v {
                        SqlValue::Int(i) => rusqlite::types::Value::Integer(*i),
                        SqlValue::Real(f) => rusqlite::types::Value::Real(*f),
                        SqlValue::Text(s) => rusqlite::types::Value::Text(s.clone()),
                    })
                    .collect();
                stmt.execute(rusqlite::params_from_iter(params))?;
            }
        }
    }
    Ok(())
}
