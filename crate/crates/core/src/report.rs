//! Scan summaries: knee location, FWHM at the knee, and scan-level checks.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, ShapeName};
use crate::error::Result;
use crate::runner::{parse_scan_csv, parse_tdqmc_csv, RunStatus, ScanRow};

/// Yield ratio between knee maximum and minimum.
pub const KNEE_RATIO_MIN: f64 = 1.5;
/// FWHM ratio between the knee minimum and maximum.
pub const FWHM_RATIO_MIN: f64 = 1.5;
pub const SPEARMAN_MIN: f64 = 0.7;
/// Where the knee maximum and minimum are expected (W/cm²), before widening
/// by one scan step on each side.
pub const KNEE_MAX_RANGE: (f64, f64) = (4.5e14, 5.0e14);
pub const KNEE_MIN_AT: f64 = 6.0e14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knee {
    pub max_index: usize,
    pub min_index: usize,
    pub ratio: f64,
}

/// Interior local maximum followed by an interior local minimum, choosing
/// the pair with the largest yield ratio.
pub fn find_knee(yields: &[f64]) -> Option<Knee> {
    let n = yields.len();
    if n < 3 {
        return None;
    }
    let is_max = |i: usize| yields[i] > yields[i - 1] && yields[i] >= yields[i + 1];
    let is_min = |i: usize| yields[i] < yields[i - 1] && yields[i] <= yields[i + 1];
    let mut best: Option<Knee> = None;
    for i in (1..n - 1).filter(|&i| is_max(i)) {
        for j in (i + 1..n - 1).filter(|&j| is_min(j)) {
            let ratio = yields[i] / yields[j];
            if best.is_none_or(|b| ratio > b.ratio) {
                best = Some(Knee {
                    max_index: i,
                    min_index: j,
                    ratio,
                });
            }
        }
    }
    best
}

/// Ranks with ties sharing their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; `None` for fewer than three points or a
/// constant input.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 3 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    (va > 0.0 && vb > 0.0).then(|| cov / (va * vb).sqrt())
}

/// One chirp series, sorted by intensity, completed points only.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub chirp_sign: i32,
    pub intensity: Vec<f64>,
    pub di_yield: Vec<f64>,
    pub fwhm: Vec<Option<f64>>,
    pub entropy: Vec<f64>,
}

impl Series {
    /// Smallest spacing of the intensity grid.
    pub fn step(&self) -> Option<f64> {
        self.intensity
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))))
    }

    pub fn knee(&self) -> Option<Knee> {
        find_knee(&self.di_yield)
    }
}

pub fn split_series(rows: &[ScanRow]) -> Vec<Series> {
    let mut signs: Vec<i32> = rows.iter().map(|r| r.chirp_sign).collect();
    signs.sort_unstable();
    signs.dedup();
    signs
        .into_iter()
        .map(|sign| {
            let mut pts: Vec<&ScanRow> = rows
                .iter()
                .filter(|r| r.chirp_sign == sign && r.status != RunStatus::Failed)
                .filter(|r| r.di_yield.is_some() && r.entropy_nats.is_some())
                .collect();
            pts.sort_by(|a, b| a.intensity_w_cm2.total_cmp(&b.intensity_w_cm2));
            Series {
                chirp_sign: sign,
                intensity: pts.iter().map(|r| r.intensity_w_cm2).collect(),
                di_yield: pts.iter().map(|r| r.di_yield.unwrap_or(f64::NAN)).collect(),
                fwhm: pts.iter().map(|r| r.fwhm_rad).collect(),
                entropy: pts.iter().map(|r| r.entropy_nats.unwrap_or(f64::NAN)).collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotEvaluated,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotEvaluated => "NOT EVALUATED",
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u8, name: &str, verdict: Verdict, detail: String) -> Self {
        Self {
            id,
            name: name.into(),
            verdict,
            detail,
        }
    }
}

pub use crate::runner::TdqmcRow;

/// Scan table plus what is known about how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub shape: Option<ShapeName>,
    pub rows: Vec<ScanRow>,
    pub tdqmc: Vec<TdqmcRow>,
}

impl ScanTable {
    /// Loads `scan.csv` (and `tdqmc_entropy.csv`, `scan_config.toml` when
    /// present) from a scan directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let rows = parse_scan_csv(&std::fs::read_to_string(dir.join("scan.csv"))?)?;
        let tdqmc = match std::fs::read_to_string(dir.join("tdqmc_entropy.csv")) {
            Ok(text) => parse_tdqmc_csv(&text)?,
            Err(_) => Vec::new(),
        };
        let shape = std::fs::read_to_string(dir.join("scan_config.toml"))
            .ok()
            .and_then(|t| RunConfig::from_toml(&t).ok())
            .map(|c| c.pulse.shape);
        Ok(Self { shape, rows, tdqmc })
    }
}

fn fmt_i(i: f64) -> String {
    format!("{:.2}e14", i / 1e14)
}

/// Knee position and yield ratio on the unchirped trapezoid series.
pub fn check_knee(series: &Series) -> CriterionResult {
    let name = "knee structure of the DI yield";
    let Some(step) = series.step() else {
        return CriterionResult::new(2, name, Verdict::NotEvaluated, "fewer than two points".into());
    };
    let Some(k) = series.knee() else {
        return CriterionResult::new(2, name, Verdict::Fail, "no local maximum followed by a local minimum".into());
    };
    let (imax, imin) = (series.intensity[k.max_index], series.intensity[k.min_index]);
    let max_ok = imax >= KNEE_MAX_RANGE.0 - step * 1.0001 && imax <= KNEE_MAX_RANGE.1 + step * 1.0001;
    let min_ok = (imin - KNEE_MIN_AT).abs() <= step * 1.0001;
    let ratio_ok = k.ratio > KNEE_RATIO_MIN;
    CriterionResult::new(
        2,
        name,
        Verdict::from_bool(max_ok && min_ok && ratio_ok),
        format!(
            "max at {} (expected 4.50e14-5.00e14 +/- one step), min at {} (expected 6.00e14 +/- one step), ratio {:.3} (> {KNEE_RATIO_MIN})",
            fmt_i(imax),
            fmt_i(imin),
            k.ratio
        ),
    )
}

/// FWHM at the knee minimum versus the knee maximum.
pub fn check_fwhm_ordering(id: u8, series: &Series) -> CriterionResult {
    let name = "phase-mismatch ordering at the knee";
    let Some(k) = series.knee() else {
        return CriterionResult::new(id, name, Verdict::Fail, "no knee in the yield series".into());
    };
    match (series.fwhm[k.max_index], series.fwhm[k.min_index]) {
        (Some(at_max), Some(at_min)) => CriterionResult::new(
            id,
            name,
            Verdict::from_bool(at_min >= FWHM_RATIO_MIN * at_max),
            format!(
                "FWHM {:.4} rad at yield max {}, {:.4} rad at yield min {}, ratio {:.3} (>= {FWHM_RATIO_MIN})",
                at_max,
                fmt_i(series.intensity[k.max_index]),
                at_min,
                fmt_i(series.intensity[k.min_index]),
                at_min / at_max
            ),
        ),
        _ => CriterionResult::new(id, name, Verdict::Fail, "FWHM undefined at a knee point".into()),
    }
}

fn argmin_fwhm(s: &Series) -> Option<f64> {
    s.fwhm
        .iter()
        .zip(&s.intensity)
        .filter_map(|(f, &i)| f.map(|f| (f, i)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, i)| i)
}

/// Chirped yield minima move by at least one grid step, FWHM minima with them.
pub fn check_chirp_shift(series: &[Series]) -> CriterionResult {
    let name = "chirp shifts the yield minimum";
    let find = |sign| series.iter().find(|s| s.chirp_sign == sign);
    let (Some(base), Some(neg), Some(pos)) = (find(0), find(-1), find(1)) else {
        return CriterionResult::new(4, name, Verdict::NotEvaluated, "needs chirp signs -1, 0 and +1".into());
    };
    let Some(step) = base.step() else {
        return CriterionResult::new(4, name, Verdict::NotEvaluated, "fewer than two points".into());
    };
    let minimum = |s: &Series| s.knee().map(|k| s.intensity[k.min_index]);
    let Some(i0) = minimum(base) else {
        return CriterionResult::new(4, name, Verdict::Fail, "no yield minimum for the unchirped pulse".into());
    };
    let f0 = argmin_fwhm(base);
    let mut ok = true;
    let mut parts = vec![format!("unchirped minimum at {}", fmt_i(i0))];
    for s in [neg, pos] {
        let label = if s.chirp_sign < 0 { "negative" } else { "positive" };
        match (minimum(s), argmin_fwhm(s), f0) {
            (Some(i), Some(fm), Some(f0)) => {
                let shift = i - i0;
                let fshift = fm - f0;
                let moved = shift.abs() >= step * 0.9999;
                let with = fshift.abs() >= step * 0.9999 && fshift.signum() == shift.signum();
                ok &= moved && with;
                parts.push(format!(
                    "{label}: minimum at {} (shift {:+.2}e14), FWHM minimum shift {:+.2}e14",
                    fmt_i(i),
                    shift / 1e14,
                    fshift / 1e14
                ));
            }
            _ => {
                ok = false;
                parts.push(format!("{label}: no yield minimum or FWHM values"));
            }
        }
    }
    CriterionResult::new(4, name, Verdict::from_bool(ok), parts.join("; "))
}

/// Spearman correlation of entropy with DI yield in every series.
pub fn check_entropy_comovement(series: &[Series]) -> CriterionResult {
    let name = "entropy follows the DI yield";
    let mut parts = Vec::new();
    let mut ok = !series.is_empty();
    for s in series {
        match spearman(&s.entropy, &s.di_yield) {
            Some(r) => {
                ok &= r > SPEARMAN_MIN;
                parts.push(format!("chirp {:+}: rho = {r:.3}", s.chirp_sign));
            }
            None => {
                ok = false;
                parts.push(format!("chirp {:+}: too few points", s.chirp_sign));
            }
        }
    }
    CriterionResult::new(5, name, Verdict::from_bool(ok), format!("{} (> {SPEARMAN_MIN})", parts.join(", ")))
}

/// `|S_NSDI − S_Q24| < |S_NSDI − S_Q13|` at a majority of points.
pub fn check_tdqmc_ordering(rows: &[TdqmcRow]) -> CriterionResult {
    let name = "TDQMC NSDI entropy closer to Q24 than Q13 (soft)";
    if rows.is_empty() {
        return CriterionResult::new(6, name, Verdict::NotEvaluated, "no TDQMC entropies".into());
    }
    let closer = rows
        .iter()
        .filter(|(_, _, s)| match (s[1], s[2], s[3]) {
            (Some(n), Some(q13), Some(q24)) => (n - q24).abs() < (n - q13).abs(),
            _ => false,
        })
        .count();
    let defined = rows
        .iter()
        .filter(|(_, _, s)| s[1].is_some() && s[2].is_some() && s[3].is_some())
        .count();
    CriterionResult::new(
        6,
        name,
        Verdict::from_bool(2 * closer > rows.len()),
        format!("{closer} of {} points (all three channels defined at {defined})", rows.len()),
    )
}

/// Every scan-level criterion that applies to this table.
pub fn evaluate(table: &ScanTable) -> Vec<CriterionResult> {
    let series = split_series(&table.rows);
    let mut out = Vec::new();
    let trapezoid = table.shape != Some(ShapeName::Gaussian);
    let base = series.iter().find(|s| s.chirp_sign == 0);
    if trapezoid {
        match base {
            Some(b) => {
                out.push(check_knee(b));
                out.push(check_fwhm_ordering(3, b));
            }
            None => {
                let msg = "no unchirped series".to_string();
                out.push(CriterionResult::new(2, "knee structure of the DI yield", Verdict::NotEvaluated, msg.clone()));
                out.push(CriterionResult::new(3, "phase-mismatch ordering at the knee", Verdict::NotEvaluated, msg));
            }
        }
    }
    if series.len() > 1 {
        out.push(check_chirp_shift(&series));
    }
    out.push(check_entropy_comovement(&series));
    if trapezoid {
        out.push(check_tdqmc_ordering(&table.tdqmc));
    }
    out
}

/// Markdown summary of a scan table.
pub fn emit_report(table: &ScanTable) -> String {
    let mut s = String::from("# Scan report\n\n");
    let series = split_series(&table.rows);
    let failed = table.rows.iter().filter(|r| r.status == RunStatus::Failed).count();
    let _ = writeln!(
        s,
        "{} scan points, {} failed, {} series.\n",
        table.rows.len(),
        failed,
        series.len()
    );
    for ser in &series {
        let _ = writeln!(s, "## Chirp sign {:+}\n", ser.chirp_sign);
        if ser.intensity.len() < 3 {
            let _ = writeln!(s, "no knee detectable ({} point(s))\n", ser.intensity.len());
            continue;
        }
        match ser.knee() {
            Some(k) => {
                let f = |i: usize| ser.fwhm[i].map_or("undefined".to_string(), |v| format!("{v:.4} rad"));
                let _ = writeln!(
                    s,
                    "- yield local maximum: {} W/cm² (DI {:.4e}), FWHM {}",
                    fmt_i(ser.intensity[k.max_index]),
                    ser.di_yield[k.max_index],
                    f(k.max_index)
                );
                let _ = writeln!(
                    s,
                    "- yield local minimum: {} W/cm² (DI {:.4e}), FWHM {}",
                    fmt_i(ser.intensity[k.min_index]),
                    ser.di_yield[k.min_index],
                    f(k.min_index)
                );
                let _ = writeln!(s, "- max/min yield ratio: {:.3}\n", k.ratio);
            }
            None => {
                let _ = writeln!(s, "no knee detectable (yield has no interior maximum followed by a minimum)\n");
            }
        }
    }
    let _ = writeln!(s, "## Acceptance checks\n");
    let _ = writeln!(s, "| ID | criterion | verdict | detail |\n|---|---|---|---|");
    for c in evaluate(table) {
        let _ = writeln!(s, "| {} | {} | {} | {} |", c.id, c.name, c.verdict.label(), c.detail);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: f64, sign: i32, y: f64, f: f64, e: f64) -> ScanRow {
        ScanRow {
            intensity_w_cm2: i,
            chirp_sign: sign,
            status: RunStatus::Ok,
            di_yield: Some(y),
            si_yield: Some(0.0),
            fwhm_rad: Some(f),
            entropy_nats: Some(e),
            inverse_purity: Some(1.0),
            tdqmc: None,
        }
    }

    fn synthetic(shift: f64, sign: i32) -> Vec<ScanRow> {
        (0..13)
            .map(|j| {
                let i = 2e14 + 0.5e14 * j as f64;
                let x = (i - shift) / 1e14;
                // bump near 5 with a dip near 6 on a rising background
                let y = 1e-3 * (0.2 * x + 2.0 * (-(x - 5.0).powi(2) / 0.3).exp()
                    - 0.9 * (-(x - 6.0).powi(2) / 0.2).exp()
                    + 1.0);
                let f = 0.5 + 1.5 * (-(x - 6.0).powi(2) / 0.3).exp() + 0.2 * (x - 3.0).abs();
                row(i, sign, y, f, y * 10.0)
            })
            .collect()
    }

    #[test]
    fn knee_is_named_in_report() {
        let table = ScanTable {
            shape: Some(ShapeName::Trapezoid),
            rows: synthetic(0.0, 0),
            tdqmc: Vec::new(),
        };
        let k = split_series(&table.rows)[0].knee().unwrap();
        assert_eq!(table.rows[k.min_index].intensity_w_cm2, 6e14);
        assert_eq!(table.rows[k.max_index].intensity_w_cm2, 5e14);
        let text = emit_report(&table);
        assert!(text.contains("yield local minimum: 6.00e14"));
        let results = evaluate(&table);
        let ids: Vec<u8> = results.iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![2, 3, 5, 6]);
        assert_eq!(results[0].verdict, Verdict::Pass);
        assert_eq!(results[3].verdict, Verdict::NotEvaluated);
        for c in &results {
            assert!(text.contains(&format!("| {} | {} |", c.id, c.name)));
        }
    }

    #[test]
    fn single_point_has_no_knee() {
        let table = ScanTable {
            shape: Some(ShapeName::Trapezoid),
            rows: vec![row(4.5e14, 0, 1e-3, 0.5, 0.1)],
            tdqmc: Vec::new(),
        };
        assert!(emit_report(&table).contains("no knee detectable"));
    }

    #[test]
    fn chirp_shift_detected() {
        let mut rows = synthetic(0.0, 0);
        rows.extend(synthetic(0.5e14, 1));
        rows.extend(synthetic(-0.5e14, -1));
        let table = ScanTable {
            shape: Some(ShapeName::Gaussian),
            rows,
            tdqmc: Vec::new(),
        };
        let results = evaluate(&table);
        let c4 = results.iter().find(|c| c.id == 4).unwrap();
        assert_eq!(c4.verdict, Verdict::Pass, "{}", c4.detail);
        assert!(results.iter().all(|c| c.id != 2));
    }

    #[test]
    fn spearman_oracles() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&a, &[10.0, 20.0, 25.0, 100.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&a, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        // closed form 1 - 6Σd²/(n(n²-1)) with d = (0, 0, 1, -1): 1 - 12/60
        assert!((spearman(&a, &[1.0, 2.0, 4.0, 3.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(spearman(&a, &[1.0; 4]).is_none());
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn tdqmc_majority() {
        let rows = vec![
            (0, 2e14, [Some(0.1), Some(0.5), Some(0.9), Some(0.55)]),
            (0, 3e14, [Some(0.1), Some(0.5), Some(0.52), Some(0.9)]),
            (0, 4e14, [Some(0.1), Some(0.5), Some(0.8), Some(0.45)]),
        ];
        assert_eq!(check_tdqmc_ordering(&rows).verdict, Verdict::Pass);
        assert_eq!(check_tdqmc_ordering(&rows[1..2]).verdict, Verdict::Fail);
    }
}
