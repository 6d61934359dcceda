//! Experiment reports: a `key = value` summary and a per-instance CSV.
//!
//! Floats in the CSV use the shortest decimal form that reads back exactly,
//! so statistics recomputed from the CSV equal those of the run.

use std::fmt::Write as _;
use std::io::{Read, Write};

use epd_core::{
    BatchStats, CategoryMode, InstanceDetail, InstanceResult, Provenance, Scenario, CATEGORY_COUNT,
};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("instance table: {0}")]
    Csv(#[from] csv::Error),
    #[error("instance table line {line}: bad `{column}` value `{value}`")]
    Field {
        line: u64,
        column: &'static str,
        value: String,
    },
    #[error("instance table: unexpected header")]
    Header,
}

pub const INSTANCE_COLUMNS: [&str; 29] = [
    "index",
    "master_seed",
    "species",
    "internal_nodes",
    "d_max",
    "lambda_max",
    "category_mode",
    "rho",
    "k",
    "longest_root_path",
    "shortest_root_path",
    "total_pd1",
    "total_pd2",
    "base_epd1",
    "base_epd2",
    "conversion1",
    "conversion2",
    "category_counts",
    "protected1_by_category",
    "protected2_by_category",
    "epd11",
    "epd12",
    "epd21",
    "epd22",
    "gap1",
    "gap2",
    "dissimilarity",
    "s1",
    "s2",
];

/// Settings echoed at the top of a summary, in order.
pub type Settings = Vec<(String, String)>;

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Human-readable summary of a batch.
pub fn summary_text(settings: &Settings, stats: &BatchStats) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    for (k, v) in settings {
        kv(k, v.clone());
    }
    kv("instances", stats.instances.to_string());
    kv("species_min", stats.min_species.to_string());
    kv("species_max", stats.max_species.to_string());
    kv("gap_mean_pct", pct(stats.mean_gap));
    kv("gap_std_pct", pct(stats.std_gap));
    kv("gap_max_pct", pct(stats.max_gap));
    kv("dissimilarity_max", format!("{:.2}", stats.max_dissimilarity));
    kv("gap_mean", stats.mean_gap.to_string());
    kv("gap_std", stats.std_gap.to_string());
    kv("gap_max", stats.max_gap.to_string());
    kv("dissimilarity_max_exact", stats.max_dissimilarity.to_string());

    let r = &stats.argmax;
    let d = &r.detail;
    let p = &r.provenance;
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "argmax.{k} = {v}");
    };
    kv("index", p.index.to_string());
    kv("species", d.species.to_string());
    kv("internal_nodes", d.internal_nodes.to_string());
    kv("d_max", opt(p.d_max));
    kv("lambda_max", opt(p.lambda_max));
    kv("category_mode", opt(p.category_mode.map(CategoryMode::name)));
    kv("longest_root_path", format!("{:.2}", d.longest_root_path));
    kv("shortest_root_path", format!("{:.2}", d.shortest_root_path));
    kv("category_counts", opt(d.category_counts.map(|c| join(c, " "))));
    kv("rho", p.rho.to_string());
    kv("k", r.k.to_string());
    for w in 0..2 {
        let s = w + 1;
        kv(
            &format!("conversion{s}"),
            opt(d.conversions[w].map(|c| join(c.0.map(|x| format!("{x:.2}")), " "))),
        );
        kv(&format!("total_pd{s}"), format!("{:.2}", d.total_pd[w]));
        kv(&format!("base_epd{s}"), format!("{:.2}", d.base_epd[w]));
        kv(
            &format!("protected{s}_by_category"),
            opt(d.protected_by_category.map(|c| join(c[w], " "))),
        );
    }
    kv("epd11", format!("{:.2}", r.epd11));
    kv("epd12", format!("{:.2}", r.epd12));
    kv("epd22", format!("{:.2}", r.epd22));
    kv("epd21", format!("{:.2}", r.epd21));
    kv("gap1_pct", pct(r.gap1));
    kv("gap2_pct", pct(r.gap2));
    kv("dissimilarity", format!("{:.2}", r.dissimilarity));
    out
}

fn result_record(r: &InstanceResult) -> Vec<String> {
    let p = &r.provenance;
    let d = &r.detail;
    let conversion = |w: usize| opt(d.conversions[w].map(|c| join(c.0, ";")));
    let protected = |w: usize| opt(d.protected_by_category.map(|c| join(c[w], ";")));
    vec![
        p.index.to_string(),
        p.master_seed.to_string(),
        d.species.to_string(),
        d.internal_nodes.to_string(),
        opt(p.d_max),
        opt(p.lambda_max),
        opt(p.category_mode.map(CategoryMode::name)),
        p.rho.to_string(),
        r.k.to_string(),
        d.longest_root_path.to_string(),
        d.shortest_root_path.to_string(),
        d.total_pd[0].to_string(),
        d.total_pd[1].to_string(),
        d.base_epd[0].to_string(),
        d.base_epd[1].to_string(),
        conversion(0),
        conversion(1),
        opt(d.category_counts.map(|c| join(c, ";"))),
        protected(0),
        protected(1),
        r.epd11.to_string(),
        r.epd12.to_string(),
        r.epd21.to_string(),
        r.epd22.to_string(),
        r.gap1.to_string(),
        r.gap2.to_string(),
        r.dissimilarity.to_string(),
        join(&r.s1, ";"),
        join(&r.s2, ";"),
    ]
}

/// Writes one CSV row per result, in the given order.
pub fn write_instances<W: Write>(writer: W, results: &[InstanceResult]) -> Result<(), ReportError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(INSTANCE_COLUMNS)?;
    for r in results {
        csv.write_record(result_record(r))?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    line: u64,
}

impl Row<'_> {
    fn raw(&self, col: usize) -> &str {
        &self.record[col]
    }

    fn parse<T: std::str::FromStr>(&self, col: usize) -> Result<T, ReportError> {
        self.raw(col).parse().map_err(|_| self.bad(col))
    }

    fn optional<T: std::str::FromStr>(&self, col: usize) -> Result<Option<T>, ReportError> {
        if self.raw(col).is_empty() {
            Ok(None)
        } else {
            self.parse(col).map(Some)
        }
    }

    fn list<T: std::str::FromStr>(&self, col: usize) -> Result<Vec<T>, ReportError> {
        if self.raw(col).is_empty() {
            return Ok(Vec::new());
        }
        self.raw(col)
            .split(';')
            .map(|x| x.parse().map_err(|_| self.bad(col)))
            .collect()
    }

    fn array<T: std::str::FromStr + Copy + Default>(
        &self,
        col: usize,
    ) -> Result<Option<[T; CATEGORY_COUNT]>, ReportError> {
        let items = self.list::<T>(col)?;
        if items.is_empty() {
            return Ok(None);
        }
        let arr: [T; CATEGORY_COUNT] = items.try_into().map_err(|_| self.bad(col))?;
        Ok(Some(arr))
    }

    fn bad(&self, col: usize) -> ReportError {
        ReportError::Field {
            line: self.line,
            column: INSTANCE_COLUMNS[col],
            value: self.raw(col).to_owned(),
        }
    }
}

fn category_mode(name: &str) -> Option<CategoryMode> {
    [CategoryMode::Uniform, CategoryMode::Skewed, CategoryMode::CoinFlip]
        .into_iter()
        .find(|m| m.name() == name)
}

/// Reads a table written by [`write_instances`].
pub fn read_instances<R: Read>(reader: R) -> Result<Vec<InstanceResult>, ReportError> {
    let mut csv = csv::Reader::from_reader(reader);
    if csv.headers()?.iter().ne(INSTANCE_COLUMNS) {
        return Err(ReportError::Header);
    }
    let mut out = Vec::new();
    for record in csv.records() {
        let record = record?;
        let row = Row {
            line: record.position().map_or(0, csv::Position::line),
            record: &record,
        };
        let mode = match row.raw(6) {
            "" => None,
            name => Some(category_mode(name).ok_or_else(|| row.bad(6))?),
        };
        let protected = match (row.array::<usize>(18)?, row.array::<usize>(19)?) {
            (Some(a), Some(b)) => Some([a, b]),
            _ => None,
        };
        out.push(InstanceResult {
            provenance: Provenance {
                index: row.parse(0)?,
                master_seed: row.parse(1)?,
                // drawn and realized counts coincide for generated trees
                internal_nodes: match row.raw(4) {
                    "" => None,
                    _ => Some(row.parse(3)?),
                },
                d_max: row.optional(4)?,
                lambda_max: row.optional(5)?,
                category_mode: mode,
                rho: row.parse(7)?,
            },
            k: row.parse(8)?,
            detail: InstanceDetail {
                species: row.parse(2)?,
                internal_nodes: row.parse(3)?,
                longest_root_path: row.parse(9)?,
                shortest_root_path: row.parse(10)?,
                total_pd: [row.parse(11)?, row.parse(12)?],
                base_epd: [row.parse(13)?, row.parse(14)?],
                conversions: [row.array(15)?.map(Scenario), row.array(16)?.map(Scenario)],
                category_counts: row.array(17)?,
                protected_by_category: protected,
            },
            epd11: row.parse(20)?,
            epd12: row.parse(21)?,
            epd21: row.parse(22)?,
            epd22: row.parse(23)?,
            gap1: row.parse(24)?,
            gap2: row.parse(25)?,
            dissimilarity: row.parse(26)?,
            s1: row.list(27)?,
            s2: row.list(28)?,
        });
    }
    Ok(out)
}
