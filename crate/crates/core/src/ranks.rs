//! Rank data: within-trial rankings, centered ranks, the standardized
//! column-sum vector `S` and the Friedman statistic `F_r = Σ S_j²`.
//!
//! Centered ranks are kept as doubled integers (`2ρ = 2π − (r+1)`), so row
//! sums and small-case moments stay exact. Floating point only enters when
//! the column sums are scaled into `S`.

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// An `n × r` matrix of within-trial rankings; every row is a permutation of `1..=r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RankMatrix {
    n: usize,
    r: usize,
    ranks: Vec<u32>,
}

impl RankMatrix {
    /// Builds a matrix from row-major ranks, validating every row.
    pub fn new(n: usize, r: usize, ranks: Vec<u32>) -> Result<Self> {
        if n < 1 {
            return Err(domain("need at least one trial (n >= 1)"));
        }
        if r < 2 {
            return Err(domain("need at least two treatments (r >= 2)"));
        }
        if ranks.len() != n * r {
            return Err(domain(format!(
                "expected {} entries for a {n}x{r} matrix, got {}",
                n * r,
                ranks.len()
            )));
        }
        let mut seen = vec![false; r];
        for (i, row) in ranks.chunks_exact(r).enumerate() {
            seen.iter_mut().for_each(|s| *s = false);
            for &v in row {
                let idx = v as usize;
                if idx == 0 || idx > r || seen[idx - 1] {
                    return Err(Error::NotPermutation { row: i + 1, r });
                }
                seen[idx - 1] = true;
            }
        }
        Ok(Self { n, r, ranks })
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let n = rows.len();
        let r = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != r) {
            return Err(Error::Parse("rows have different lengths".into()));
        }
        Self::new(n, r, rows.concat())
    }

    /// Trial count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Treatment count.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.ranks[i * self.r..(i + 1) * self.r]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.ranks.chunks_exact(self.r)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.ranks
    }
}

/// Ranks each row of a real-valued score matrix (1 = smallest).
pub fn ranks_from_scores(scores: &[Vec<f64>]) -> Result<RankMatrix> {
    let n = scores.len();
    let r = scores.first().map_or(0, Vec::len);
    let mut ranks = Vec::with_capacity(n * r);
    let mut order: Vec<usize> = Vec::with_capacity(r);
    for (i, row) in scores.iter().enumerate() {
        if row.len() != r {
            return Err(Error::Parse(format!(
                "row {} has {} columns, expected {r}",
                i + 1,
                row.len()
            )));
        }
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i + 1, col: col + 1 });
        }
        order.clear();
        order.extend(0..r);
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        if order.windows(2).any(|w| row[w[0]] == row[w[1]]) {
            return Err(Error::Tie { row: i + 1 });
        }
        let mut row_ranks = vec![0u32; r];
        for (rank, &col) in order.iter().enumerate() {
            row_ranks[col] = rank as u32 + 1;
        }
        ranks.extend(row_ranks);
    }
    RankMatrix::new(n, r, ranks)
}

/// Centered ranks `ρ_i(j) = π_i(j) − (r+1)/2`, stored doubled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CenteredRanks {
    n: usize,
    r: usize,
    doubled: Vec<i64>,
}

impl CenteredRanks {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// `2ρ_i(j)`, always an integer.
    pub fn doubled(&self, i: usize, j: usize) -> i64 {
        self.doubled[i * self.r + j]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.doubled(i, j) as f64 / 2.0
    }

    pub fn doubled_row(&self, i: usize) -> &[i64] {
        &self.doubled[i * self.r..(i + 1) * self.r]
    }

    /// Column sums of the doubled centered ranks, `Σ_i 2ρ_i(j)`.
    pub fn doubled_column_sums(&self) -> Vec<i64> {
        let mut sums = vec![0i64; self.r];
        for row in self.doubled.chunks_exact(self.r) {
            for (s, &v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }
}

pub fn center(ranks: &RankMatrix) -> CenteredRanks {
    let shift = ranks.r as i64 + 1;
    CenteredRanks {
        n: ranks.n,
        r: ranks.r,
        doubled: ranks.ranks.iter().map(|&p| 2 * p as i64 - shift).collect(),
    }
}

/// `√(12 / (r(r+1)n))`, the factor turning rank sums into `S`.
pub fn score_scale(n: usize, r: usize) -> f64 {
    (12.0 / (r as f64 * (r as f64 + 1.0) * n as f64)).sqrt()
}

/// The standardized column sums `S` and the statistic `F_r = Σ S_j²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreVector {
    pub s: Vec<f64>,
    pub f_r: f64,
}

impl ScoreVector {
    /// Scores from doubled column sums `Σ_i 2ρ_i(j)`.
    pub fn from_doubled_sums(sums: &[i64], n: usize) -> Self {
        let scale = score_scale(n, sums.len()) / 2.0;
        let s: Vec<f64> = sums.iter().map(|&c| c as f64 * scale).collect();
        Self { s, f_r: statistic_from_doubled_sums(sums, n) }
    }
}

pub fn score_vector(centered: &CenteredRanks) -> ScoreVector {
    ScoreVector::from_doubled_sums(&centered.doubled_column_sums(), centered.n)
}

/// `Σ_j S_j²` from the doubled column sums with a single rounding: `3·Σ c_j² / (r(r+1)n)`.
pub fn statistic_from_doubled_sums(sums: &[i64], n: usize) -> f64 {
    let r = sums.len() as f64;
    let q: i64 = sums.iter().map(|c| c * c).sum();
    3.0 * q as f64 / (r * (r + 1.0) * n as f64)
}

/// Covariance matrix of `S` under the null: `(r−1)/r` on the diagonal, `−1/r` off it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceMatrix {
    pub r: usize,
    pub sigma: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.sigma[j * self.r + k]
    }
}

pub fn theoretical_covariance(r: usize) -> Result<CovarianceMatrix> {
    if r < 2 {
        return Err(domain("covariance needs r >= 2"));
    }
    let rf = r as f64;
    let sigma = (0..r * r)
        .map(|idx| if idx / r == idx % r { (rf - 1.0) / rf } else { -1.0 / rf })
        .collect();
    Ok(CovarianceMatrix { r, sigma })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Scores,
    Ranks,
}

/// Parses comma-separated rows (trials) into a rank matrix. A first line that does
/// not parse as numbers is taken to be a header and skipped.
pub fn parse_csv(text: &str, format: InputFormat) -> Result<RankMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => rows.push(values),
            Err(_) if i == 0 => {}
            Err(_) => {
                let line = record.position().map_or(i as u64 + 1, |p| p.line());
                return Err(Error::Parse(format!("line {line}: non-numeric field")));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    let r = rows[0].len();
    if let Some(bad) = rows.iter().position(|row| row.len() != r) {
        return Err(Error::Parse(format!(
            "data row {} has {} columns, expected {r}",
            bad + 1,
            rows[bad].len()
        )));
    }
    match format {
        InputFormat::Scores => ranks_from_scores(&rows),
        InputFormat::Ranks => {
            let mut ranks = Vec::with_capacity(rows.len() * r);
            for (i, row) in rows.iter().enumerate() {
                for &v in row {
                    if v.fract() != 0.0 || v < 1.0 || v > r as f64 {
                        return Err(Error::NotPermutation { row: i + 1, r });
                    }
                    ranks.push(v as u32);
                }
            }
            RankMatrix::new(rows.len(), r, ranks)
        }
    }
}
