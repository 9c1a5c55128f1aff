//! Classification records, range scans and the result cache behind the `tiling` binary.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use tiling_core::arith::{factor_squarefree, is_squarefree, sigma_class, ArithError, FactoredSquareFree};
use tiling_core::classgroup::{class_group_oracle, field_disc, four_rank_redei, genus_parity_redei, ORACLE_DISC_LIMIT};
use tiling_core::curveinv::root_number;
use tiling_core::descent::{
    brute_force_selmer, selmer_dim_matrix, DescentError, DispatchCase, Method, ORACLE_BOUND, ORACLE_MAX_PRIMES,
};
use tiling_core::shaparity::cl_parity;
use tiling_core::ternary::sha_parity_ternary;

/// Bumped whenever a record's content could change for the same `n`.
pub const ANALYSIS_VERSION: u32 = 1;
/// Environment variable naming the cache file when `--cache` is absent.
pub const CACHE_ENV: &str = "TILING_CACHE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0} is not a non-zero square-free integer")]
    NotSquareFree(i64),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("bad class spec {0:?}; expected e.g. \"3 mod 24\" or \"3,7 mod 24\"")]
    ClassSpec(String),
    #[error("range {from}..={to} is empty or not positive")]
    Range { from: u64, to: u64 },
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cache line {line} in {path} is malformed: {reason}")]
    Cache { path: PathBuf, line: usize, reason: String },
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::NotSquareFree(_) | CliError::ClassSpec(_) | CliError::Range { .. } | CliError::Unsupported(_) => {
                EXIT_UNSUPPORTED
            }
            CliError::Arith(ArithError::FactorizationFailure { .. }) => EXIT_BUDGET,
            CliError::Arith(_) => EXIT_UNSUPPORTED,
            CliError::Io { .. } | CliError::Cache { .. } => EXIT_BUDGET,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// A value or the reason it is absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analysis<T> {
    pub value: Option<T>,
    pub reason: Option<String>,
}

impl<T> Analysis<T> {
    fn some(v: T) -> Self {
        Self { value: Some(v), reason: None }
    }

    fn none(reason: impl ToString) -> Self {
        Self { value: None, reason: Some(reason.to_string()) }
    }

    fn from_result<E: std::fmt::Display>(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => Self::some(v),
            Err(e) => Self::none(e),
        }
    }

    pub fn get(&self) -> Option<&T> {
        self.value.as_ref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair<T> {
    pub pos: T,
    pub neg: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelmerInfo {
    pub dim_mod_torsion: u32,
    pub method: Method,
    /// Oracle value when it was also run.
    pub oracle_dim_mod_torsion: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TernaryInfo {
    pub form: String,
    pub argument: u64,
    pub r: i64,
    pub mu: u32,
    pub cl_odd: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedNonTiling,
    RankPositivePredicted,
    Inconclusive,
    SpecialCase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyRecord {
    pub n: i64,
    pub sigma_class: String,
    pub root_numbers: Pair<i8>,
    pub selmer: Pair<Analysis<SelmerInfo>>,
    pub genus_parity: Analysis<bool>,
    pub four_rank: Analysis<u32>,
    pub ternary: Pair<Analysis<TernaryInfo>>,
    pub cl_parity: Pair<Analysis<bool>>,
    pub verdict: Verdict,
    pub mismatch: bool,
    pub mismatches: Vec<String>,
    pub notes: Vec<String>,
}

fn oracle_allowed(m: &FactoredSquareFree) -> bool {
    m.magnitude() <= ORACLE_BOUND && m.prime_factors().len() <= ORACLE_MAX_PRIMES
}

fn selmer_for(m: &FactoredSquareFree) -> Analysis<SelmerInfo> {
    if m.magnitude() == 1 || m.value() == 3 {
        return Analysis::none("special case");
    }
    let oracle = oracle_allowed(m).then(|| brute_force_selmer(m));
    let formula = DispatchCase::of(m).map(|_| selmer_dim_matrix(m));
    match (formula, oracle) {
        (Some(Ok(f)), Some(Ok(o))) => Analysis::some(SelmerInfo {
            dim_mod_torsion: f.dim_mod_torsion,
            method: f.method,
            oracle_dim_mod_torsion: Some(o.dim_mod_torsion),
        }),
        (Some(Ok(f)), _) => {
            Analysis::some(SelmerInfo { dim_mod_torsion: f.dim_mod_torsion, method: f.method, oracle_dim_mod_torsion: None })
        }
        (_, Some(Ok(o))) => Analysis::some(SelmerInfo {
            dim_mod_torsion: o.dim_mod_torsion,
            method: Method::Oracle,
            oracle_dim_mod_torsion: Some(o.dim_mod_torsion),
        }),
        (Some(Err(e)), _) | (None, Some(Err(e))) => Analysis::none(e),
        (None, None) => Analysis::none(DescentError::OracleBound {
            m: m.value(),
            bound: ORACLE_BOUND,
            max_primes: ORACLE_MAX_PRIMES,
        }),
    }
}

fn ternary_for(n: &FactoredSquareFree, sign: i8) -> Analysis<TernaryInfo> {
    Analysis::from_result(sha_parity_ternary(n, sign).map(|t| TernaryInfo {
        form: t.form.to_string(),
        argument: t.argument,
        r: t.r,
        mu: t.mu,
        cl_odd: t.cl_odd,
    }))
}

/// Every analysis that applies to `n`, the verdict and equivalence checks.
pub fn classify(n: i64) -> Result<ClassifyRecord, CliError> {
    if n == 0 || !is_squarefree(n.unsigned_abs()) {
        return Err(CliError::NotSquareFree(n));
    }
    let f = factor_squarefree(n)?;
    let pos = f.abs();
    let neg = pos.negate();
    let mag = pos.magnitude();
    let mut notes = Vec::new();
    let root_numbers = Pair { pos: root_number(&pos), neg: root_number(&neg) };
    let selmer = Pair { pos: selmer_for(&pos), neg: selmer_for(&neg) };
    let genus_parity = Analysis::from_result(genus_parity_redei(&pos));
    let four_rank = if mag % 4 == 3 {
        Analysis::from_result(four_rank_redei(&pos))
    } else {
        Analysis::none("defined here for n = 3 mod 4")
    };
    let (ternary, cl) = if mag > 3 {
        (
            Pair { pos: ternary_for(&pos, 1), neg: ternary_for(&pos, -1) },
            Pair {
                pos: Analysis::from_result(cl_parity(&pos, 1).map(|r| r.cl_odd)),
                neg: Analysis::from_result(cl_parity(&pos, -1).map(|r| r.cl_odd)),
            },
        )
    } else {
        (
            Pair { pos: Analysis::none("n <= 3"), neg: Analysis::none("n <= 3") },
            Pair { pos: Analysis::none("n <= 3"), neg: Analysis::none("n <= 3") },
        )
    };

    let mut mismatches = Vec::new();
    for (label, s, eps) in [("+n", &selmer.pos, root_numbers.pos), ("-n", &selmer.neg, root_numbers.neg)] {
        if let Some(s) = s.get() {
            if let Some(o) = s.oracle_dim_mod_torsion {
                if o != s.dim_mod_torsion {
                    mismatches.push(format!("{label}: matrix dim {} vs oracle dim {o}", s.dim_mod_torsion));
                }
            }
            if (s.dim_mod_torsion % 2 == 1) != (eps < 0) {
                mismatches.push(format!("{label}: dim {} has the wrong parity for root number {eps}", s.dim_mod_torsion));
            }
        }
    }
    if let Some(&g) = genus_parity.get() {
        let disc = field_disc(mag);
        if disc.unsigned_abs() <= ORACLE_DISC_LIMIT {
            if let Ok(s) = class_group_oracle(disc) {
                if (s.two_cl % 2 == 1) != g {
                    mismatches.push(format!("genus parity {g} vs #2Cl = {}", s.two_cl));
                }
                if let Some(&r) = four_rank.get() {
                    if r != s.four_rank {
                        mismatches.push(format!("4-rank {r} vs forms {}", s.four_rank));
                    }
                }
            }
        }
    }
    if matches!(mag % 24, 3 | 7) && mag > 3 {
        for (label, s, c, t) in [
            ("+n", &selmer.pos, &cl.pos, &ternary.pos),
            ("-n", &selmer.neg, &cl.neg, &ternary.neg),
        ] {
            if let (Some(s), Some(&c)) = (s.get(), c.get()) {
                if (s.dim_mod_torsion == 0) != c {
                    mismatches.push(format!("{label}: CL odd = {c} but Selmer dim {}", s.dim_mod_torsion));
                }
            }
            if let (Some(t), Some(&c)) = (t.get(), c.get()) {
                if t.cl_odd != c {
                    mismatches.push(format!("{label}: ternary parity {} vs genus formula {c}", t.cl_odd));
                }
            }
        }
        if mag % 24 == 3 {
            if let (Some(&r), Some(s)) = (four_rank.get(), selmer.pos.get()) {
                if (r == 0) != (s.dim_mod_torsion == 0) {
                    mismatches.push(format!("4-rank {r} vs Selmer dim {}", s.dim_mod_torsion));
                }
            }
        }
    }

    let dims = (selmer.pos.get().map(|s| s.dim_mod_torsion), selmer.neg.get().map(|s| s.dim_mod_torsion));
    let verdict = if mag <= 3 {
        notes.push(if mag == 1 { "torsion Z/2 x Z/4 at n = 1".into() } else { "n <= 3 lies outside the rank criterion".into() });
        Verdict::SpecialCase
    } else if dims == (Some(0), Some(0)) {
        Verdict::CertifiedNonTiling
    } else if root_numbers.pos < 0 || root_numbers.neg < 0 {
        notes.push("root number -1 forces odd Selmer rank; positive rank is BSD-conditional".into());
        Verdict::RankPositivePredicted
    } else {
        Verdict::Inconclusive
    };
    Ok(ClassifyRecord {
        n,
        sigma_class: sigma_class(&f).to_string(),
        root_numbers,
        selmer,
        genus_parity,
        four_rank,
        ternary,
        cl_parity: cl,
        verdict,
        mismatch: !mismatches.is_empty(),
        mismatches,
        notes,
    })
}

/// Residue filter `r1,r2,... mod m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassFilter {
    pub residues: Vec<u64>,
    pub modulus: u64,
}

impl ClassFilter {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let bad = || CliError::ClassSpec(spec.to_string());
        let cleaned = spec.replace('≡', " ");
        let (lhs, rhs) = cleaned.split_once("mod").ok_or_else(bad)?;
        let modulus: u64 = rhs.trim().parse().map_err(|_| bad())?;
        if modulus == 0 {
            return Err(bad());
        }
        let residues = lhs
            .split(',')
            .map(|t| t.trim().parse::<u64>().map(|r| r % modulus).map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        if residues.is_empty() {
            return Err(bad());
        }
        Ok(Self { residues, modulus })
    }

    pub fn matches(&self, n: u64) -> bool {
        self.residues.contains(&(n % self.modulus))
    }
}

/// Append-only JSONL cache keyed by `(n, version)`.
#[derive(Debug)]
pub struct Cache {
    path: PathBuf,
    entries: HashMap<i64, ClassifyRecord>,
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    n: i64,
    version: u32,
    record: ClassifyRecord,
}

impl Cache {
    pub fn open(path: &Path) -> Result<Self, CliError> {
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(path).map_err(io_err(path))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io_err(path))?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed: CacheLine = serde_json::from_str(&line).map_err(|e| CliError::Cache {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
                if parsed.version == ANALYSIS_VERSION {
                    entries.insert(parsed.n, parsed.record);
                }
            }
        }
        Ok(Self { path: path.to_path_buf(), entries })
    }

    pub fn get(&self, n: i64) -> Option<&ClassifyRecord> {
        self.entries.get(&n)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends records not yet present.
    pub fn extend(&mut self, records: &[ClassifyRecord]) -> Result<(), CliError> {
        let fresh: Vec<&ClassifyRecord> = records.iter().filter(|r| !self.entries.contains_key(&r.n)).collect();
        if fresh.is_empty() {
            return Ok(());
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path).map_err(io_err(&self.path))?;
        for r in fresh {
            let line = serde_json::to_string(&CacheLine { n: r.n, version: ANALYSIS_VERSION, record: r.clone() })
                .expect("records serialize");
            writeln!(file, "{line}").map_err(io_err(&self.path))?;
            self.entries.insert(r.n, r.clone());
        }
        Ok(())
    }
}

/// Classifies through the cache when one is given.
pub fn classify_many(ns: &[i64], cache: Option<&mut Cache>) -> Result<Vec<ClassifyRecord>, CliError> {
    let lookup = |n: i64| cache.as_ref().and_then(|c| c.get(n).cloned());
    let cached: Vec<Option<ClassifyRecord>> = ns.iter().map(|&n| lookup(n)).collect();
    let records = ns
        .par_iter()
        .zip(cached)
        .map(|(&n, hit)| hit.map_or_else(|| classify(n), Ok))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(c) = cache {
        c.extend(&records)?;
    }
    Ok(records)
}

/// Square-free `n` in `from..=to` passing the filter, ascending.
pub fn scan_inputs(from: u64, to: u64, filter: Option<&ClassFilter>) -> Result<Vec<i64>, CliError> {
    if from == 0 || from > to {
        return Err(CliError::Range { from, to });
    }
    Ok((from..=to)
        .filter(|&n| filter.is_none_or(|f| f.matches(n)) && is_squarefree(n))
        .map(|n| n as i64)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

pub const CSV_HEADER: &str = "n,sigma_class,root_number_pos,root_number_neg,selmer_pos,selmer_pos_method,selmer_neg,selmer_neg_method,genus_parity,four_rank,ternary_r_pos,ternary_r_neg,cl_parity_pos,cl_parity_neg,verdict,mismatch";

fn csv_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::MatrixFormula => "matrix-formula",
        Method::KernelMatrix => "kernel-matrix",
        Method::Oracle => "oracle",
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::CertifiedNonTiling => "certified-non-tiling",
        Verdict::RankPositivePredicted => "rank-positive-predicted",
        Verdict::Inconclusive => "inconclusive",
        Verdict::SpecialCase => "special-case",
    }
}

pub fn csv_row(r: &ClassifyRecord) -> String {
    let bit = |b: Option<&bool>| csv_opt(b.map(|&b| u8::from(b)));
    [
        r.n.to_string(),
        r.sigma_class.clone(),
        r.root_numbers.pos.to_string(),
        r.root_numbers.neg.to_string(),
        csv_opt(r.selmer.pos.get().map(|s| s.dim_mod_torsion)),
        csv_opt(r.selmer.pos.get().map(|s| method_name(s.method))),
        csv_opt(r.selmer.neg.get().map(|s| s.dim_mod_torsion)),
        csv_opt(r.selmer.neg.get().map(|s| method_name(s.method))),
        bit(r.genus_parity.get()),
        csv_opt(r.four_rank.get()),
        csv_opt(r.ternary.pos.get().map(|t| t.r)),
        csv_opt(r.ternary.neg.get().map(|t| t.r)),
        bit(r.cl_parity.pos.get()),
        bit(r.cl_parity.neg.get()),
        verdict_name(r.verdict).to_string(),
        u8::from(r.mismatch).to_string(),
    ]
    .join(",")
}

pub fn render(records: &[ClassifyRecord], format: Format) -> String {
    let mut out = String::new();
    if format == Format::Csv {
        out.push_str(CSV_HEADER);
        out.push('\n');
    }
    for r in records {
        match format {
            Format::Jsonl => out.push_str(&serde_json::to_string(r).expect("records serialize")),
            Format::Csv => out.push_str(&csv_row(r)),
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_examples() {
        let r = classify(51).unwrap();
        assert_eq!(r.verdict, Verdict::CertifiedNonTiling);
        assert!(!r.mismatch, "{:?}", r.mismatches);
        assert_eq!(r.selmer.pos.get().unwrap().oracle_dim_mod_torsion, Some(0));
        let r = classify(5).unwrap();
        assert_eq!(r.verdict, Verdict::RankPositivePredicted);
        assert_eq!(r.root_numbers.neg, -1);
        assert_eq!(classify(1).unwrap().verdict, Verdict::SpecialCase);
        assert!(matches!(classify(12), Err(CliError::NotSquareFree(12))));
        assert!(matches!(classify(0), Err(CliError::NotSquareFree(0))));
    }

    #[test]
    fn class_filter_parsing() {
        let f = ClassFilter::parse("3 mod 24").unwrap();
        assert!(f.matches(27) && !f.matches(7));
        let f = ClassFilter::parse("≡3,7 mod 24").unwrap();
        assert_eq!(f.residues, vec![3, 7]);
        assert!(ClassFilter::parse("3 modulo").is_err());
        assert!(ClassFilter::parse("3 mod 0").is_err());
    }

    #[test]
    fn scan_filter_semantics() {
        // 27 = 3^3, 75 = 3 * 5^2 and 99 = 3^2 * 11 drop out
        let f = ClassFilter::parse("3 mod 24").unwrap();
        assert_eq!(scan_inputs(4, 100, Some(&f)).unwrap(), vec![51]);
        assert!(scan_inputs(52, 74, Some(&f)).unwrap().is_empty());
        assert!(scan_inputs(10, 5, None).is_err());
    }
}
