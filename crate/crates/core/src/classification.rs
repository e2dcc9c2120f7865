//! Existence cases, the instability table, criterion evaluation and
//! critical-speed search.

use std::fmt;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{scaling_criterion, ModelParams, Sigma};
use crate::ground_state::{
    default_grid, solve_double_power, speed_adapted, GroundState, InitialGuess, SolverConfig,
};
use crate::spectral::{Field, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CaseLabel {
    /// `a = +1`, `q` odd: positive ground state.
    CaseI,
    /// `a = -1`, `p` odd: positive ground state.
    CaseII1,
    /// `a = -1`, `p` even, `q` odd: negative ground state.
    CaseII2,
    Uncovered,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseLabel::CaseI => "I",
            CaseLabel::CaseII1 => "II-1",
            CaseLabel::CaseII2 => "II-2",
            CaseLabel::Uncovered => "uncovered",
        })
    }
}

pub fn classify_case(p: u32, q: u32, a: i8) -> CaseLabel {
    match (a, p % 2 == 1, q % 2 == 1) {
        (1, _, true) => CaseLabel::CaseI,
        (-1, true, _) => CaseLabel::CaseII1,
        (-1, false, true) => CaseLabel::CaseII2,
        _ => CaseLabel::Uncovered,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SubCase {
    I1,
    I2,
    II1i,
    II1ii,
    II1iii,
    II2i,
    II2ii,
}

impl fmt::Display for SubCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubCase::I1 => "I-1",
            SubCase::I2 => "I-2",
            SubCase::II1i => "II-1-i",
            SubCase::II1ii => "II-1-ii",
            SubCase::II1iii => "II-1-iii",
            SubCase::II2i => "II-2-i",
            SubCase::II2ii => "II-2-ii",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum InstabilityVerdict {
    UnstableAllC { tag: SubCase },
    /// Unstable above a critical speed; the bracket is filled in once
    /// [`find_critical_speed`] has located it.
    UnstableBeyond { tag: SubCase, bracket: Option<(f64, f64)> },
    TheoremSilent,
}

impl InstabilityVerdict {
    pub fn tag(&self) -> Option<SubCase> {
        match self {
            InstabilityVerdict::UnstableAllC { tag } | InstabilityVerdict::UnstableBeyond { tag, .. } => {
                Some(*tag)
            }
            InstabilityVerdict::TheoremSilent => None,
        }
    }
}

impl fmt::Display for InstabilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstabilityVerdict::UnstableAllC { tag } => write!(f, "UnstableAllC / {tag}"),
            InstabilityVerdict::UnstableBeyond { tag, bracket: None } => {
                write!(f, "UnstableBeyond / {tag}")
            }
            InstabilityVerdict::UnstableBeyond { tag, bracket: Some((lo, hi)) } => {
                write!(f, "UnstableBeyond [{lo}, {hi}] / {tag}")
            }
            InstabilityVerdict::TheoremSilent => f.write_str("TheoremSilent"),
        }
    }
}

/// Verdict of the instability theorem, with its inequalities taken exactly.
pub fn theorem_verdict(sigma: Sigma, p: u32, q: u32, a: i8) -> Result<InstabilityVerdict> {
    use InstabilityVerdict::*;
    if p < 2 || q <= p {
        return Err(Error::InvalidParameter(format!("need 2 <= p < q, got ({p}, {q})")));
    }
    let crit = sigma.critical_power();
    let pr = Ratio::from_integer(p as i64);
    let qr = Ratio::from_integer(q as i64);
    let beyond = |tag| UnstableBeyond { tag, bracket: None };
    let verdict = match classify_case(p, q, a) {
        CaseLabel::Uncovered => return Err(Error::UncoveredCase { p, q, a }),
        CaseLabel::CaseI => {
            if crit <= pr {
                UnstableAllC { tag: SubCase::I1 }
            } else if pr < crit && crit < qr {
                beyond(SubCase::I2)
            } else {
                TheoremSilent
            }
        }
        CaseLabel::CaseII1 => {
            if qr == crit {
                UnstableAllC { tag: SubCase::II1i }
            } else if pr <= crit && crit < qr {
                UnstableAllC { tag: SubCase::II1ii }
            } else if crit < pr {
                beyond(SubCase::II1iii)
            } else {
                TheoremSilent
            }
        }
        CaseLabel::CaseII2 => {
            if crit <= pr {
                UnstableAllC { tag: SubCase::II2i }
            } else if crit < qr {
                beyond(SubCase::II2ii)
            } else {
                TheoremSilent
            }
        }
    };
    Ok(verdict)
}

/// Ground state and criterion at one speed.
#[derive(Clone, Debug)]
pub struct CriterionPoint {
    pub c: f64,
    pub criterion: f64,
    pub state: GroundState,
}

impl CriterionPoint {
    /// `+1`, `-1`, or `0` when `|criterion| <= 1e-8 S_c`.
    pub fn sign(&self) -> i8 {
        let scale = 1e-8 * self.state.report.action.abs();
        if self.criterion > scale {
            1
        } else if self.criterion < -scale {
            -1
        } else {
            0
        }
    }
}

/// Criterion at `params.c`, solved on `grid` shrunk by `c^{1/sigma}`.
pub fn criterion_at(params: &ModelParams, grid: &Grid, config: &SolverConfig) -> Result<f64> {
    Ok(evaluate_point(params, grid, config, None)?.criterion)
}

/// Solves at `params.c` on the speed-adapted box. `warm` is a previous point
/// whose profile is mapped onto the new box by the speed rescaling.
pub fn evaluate_point(
    params: &ModelParams,
    grid: &Grid,
    config: &SolverConfig,
    warm: Option<&CriterionPoint>,
) -> Result<CriterionPoint> {
    let c = params.c;
    let sigma = params.sigma();
    let local = speed_adapted(grid, sigma, c)?;
    let mut cfg = config.clone();
    if let Some(prev) = warm {
        // On speed-adapted boxes the rescaling maps node j to node j.
        let factor = (c / prev.c).powf(1.0 / (params.q as f64 - 1.0));
        let values = prev.state.profile.values().iter().map(|v| v * factor).collect();
        cfg.initial_guess = Some(InitialGuess::PriorSolution(Field::new(&local, values)?));
    }
    let state = solve_double_power(params, &local, &cfg).map_err(|e| Error::at_speed(c, e))?;
    let criterion = scaling_criterion(&state.profile, params).map_err(|e| Error::at_speed(c, e))?;
    Ok(CriterionPoint { c, criterion, state })
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalBracket {
    pub c_lo: f64,
    pub c_hi: f64,
    pub criterion_lo: f64,
    pub criterion_hi: f64,
    /// More than one sign change was seen among the evaluated speeds.
    pub multiple_crossings: bool,
    /// Every `(c, criterion)` evaluated, in ascending `c`.
    pub evaluations: Vec<(f64, f64)>,
}

impl CriticalBracket {
    pub fn relative_width(&self) -> f64 {
        (self.c_hi - self.c_lo) / self.c_hi
    }
}

const C_MAX: f64 = 1e6;
const C_MIN: f64 = 1e-6;

/// Brackets the first sign change of the criterion from `>= 0` to `< 0`.
///
/// The upper end is pushed up by factors of 4 until the criterion is
/// negative, then the bracket is bisected geometrically to relative width
/// `1e-3`. Values within `1e-8 S_c` of zero never decide a side.
pub fn find_critical_speed(
    params: &ModelParams,
    bracket_hint: (f64, f64),
    grid: &Grid,
    config: &SolverConfig,
) -> Result<CriticalBracket> {
    let verdict = theorem_verdict(params.sigma, params.p, params.q, params.a)?;
    if !matches!(verdict, InstabilityVerdict::UnstableBeyond { .. }) {
        return Err(Error::InvalidParameter(format!(
            "verdict is {verdict}; there is no critical speed to find"
        )));
    }
    let (mut lo, mut hi) = bracket_hint;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "bracket hint must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    let mut seen: Vec<(f64, f64)> = Vec::new();
    let at = |c: f64, warm: Option<&CriterionPoint>, seen: &mut Vec<(f64, f64)>| {
        let pt = evaluate_point(&params.with_speed(c)?, grid, config, warm)?;
        seen.push((c, pt.criterion));
        Ok::<_, Error>(pt)
    };

    let mut p_hi = at(hi, None, &mut seen)?;
    let mut p_lo = at(lo, Some(&p_hi), &mut seen)?;
    while p_hi.sign() >= 0 {
        if p_hi.sign() > 0 {
            lo = hi;
            p_lo = p_hi.clone();
        }
        hi *= 4.0;
        if hi > C_MAX {
            return Err(Error::NoCrossing { c_max: C_MAX });
        }
        p_hi = at(hi, Some(&p_hi), &mut seen)?;
    }
    while p_lo.sign() <= 0 {
        if p_lo.sign() < 0 {
            hi = lo;
            p_hi = p_lo.clone();
        }
        lo /= 4.0;
        if lo < C_MIN {
            return Err(Error::NoCrossing { c_max: hi });
        }
        p_lo = at(lo, Some(&p_lo), &mut seen)?;
    }

    while hi - lo > 1e-3 * hi {
        let mid = (lo * hi).sqrt();
        let warm = if (mid / lo).ln() < (hi / mid).ln() { &p_lo } else { &p_hi };
        let mut p_mid = at(mid, Some(warm), &mut seen)?;
        if p_mid.sign() == 0 {
            // Indeterminate: probe off-centre before giving up.
            let alt = lo + 0.25 * (hi - lo);
            p_mid = at(alt, Some(&p_lo), &mut seen)?;
            if p_mid.sign() == 0 {
                log::warn!("criterion indeterminate near c = {mid}; bracket left at [{lo}, {hi}]");
                break;
            }
        }
        if p_mid.sign() > 0 {
            lo = p_mid.c;
            p_lo = p_mid;
        } else {
            hi = p_mid.c;
            p_hi = p_mid;
        }
    }

    seen.sort_by(|a, b| a.0.total_cmp(&b.0));
    seen.dedup_by(|a, b| a.0 == b.0);
    let signs: Vec<bool> = seen.iter().map(|&(_, v)| v < 0.0).collect();
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if changes > 1 {
        log::warn!("criterion changes sign {changes} times over the evaluated speeds");
    }
    Ok(CriticalBracket {
        c_lo: lo,
        c_hi: hi,
        criterion_lo: p_lo.criterion,
        criterion_hi: p_hi.criterion,
        multiple_crossings: changes > 1,
        evaluations: seen,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub sigma: Sigma,
    pub p: u32,
    pub q: u32,
    pub a: i8,
    pub c: f64,
    pub case: CaseLabel,
    pub verdict: String,
    pub criterion: Option<f64>,
    pub residual: Option<f64>,
    pub nehari: Option<f64>,
    pub pohozaev: Option<f64>,
    pub iterations: Option<usize>,
    /// `ok`, or the failure message for this row.
    pub status: String,
}

/// Evaluates the criterion over the Cartesian product of the lists. Rows come
/// back in nested order `sigma, (p, q), a, c` whatever the thread count.
/// `grid` is the unit-speed box; `None` picks [`default_grid`] per `sigma`.
pub fn scan(
    sigma_list: &[Sigma],
    pq_list: &[(u32, u32)],
    a_list: &[i8],
    c_list: &[f64],
    grid: Option<&Grid>,
    config: &SolverConfig,
) -> Vec<ScanRow> {
    let mut jobs = Vec::new();
    for &sigma in sigma_list {
        for &(p, q) in pq_list {
            for &a in a_list {
                for &c in c_list {
                    jobs.push((sigma, p, q, a, c));
                }
            }
        }
    }
    jobs.par_iter()
        .map(|&(sigma, p, q, a, c)| scan_row(sigma, p, q, a, c, grid, config))
        .collect()
}

fn scan_row(
    sigma: Sigma,
    p: u32,
    q: u32,
    a: i8,
    c: f64,
    grid: Option<&Grid>,
    config: &SolverConfig,
) -> ScanRow {
    let mut row = ScanRow {
        sigma,
        p,
        q,
        a,
        c,
        case: if p >= 2 && q > p { classify_case(p, q, a) } else { CaseLabel::Uncovered },
        verdict: String::new(),
        criterion: None,
        residual: None,
        nehari: None,
        pohozaev: None,
        iterations: None,
        status: String::from("ok"),
    };
    let verdict = match theorem_verdict(sigma, p, q, a) {
        Ok(v) => v,
        Err(e) => {
            row.verdict = "-".into();
            row.status = e.to_string();
            return row;
        }
    };
    row.verdict = verdict.to_string();
    let params = match ModelParams::new(sigma, p, q, a, c) {
        Ok(m) => m,
        Err(e) => {
            row.status = e.to_string();
            return row;
        }
    };
    let base = grid.cloned().unwrap_or_else(|| default_grid(sigma));
    match evaluate_point(&params, &base, config, None) {
        Ok(pt) => {
            let rep = &pt.state.report;
            row.criterion = Some(pt.criterion);
            row.residual = Some(rep.residual);
            row.nehari = Some(rep.nehari_relative(c));
            row.pohozaev = Some(rep.pohozaev_relative(params.sigma()));
            row.iterations = Some(pt.state.iterations);
            if let Some(tag) = verdict.tag() {
                let all_c = matches!(verdict, InstabilityVerdict::UnstableAllC { .. });
                if all_c && pt.criterion >= 0.0 {
                    row.status = format!("criterion non-negative under {tag}");
                }
            }
        }
        Err(e) => row.status = e.to_string(),
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Sigma {
        Sigma::from_f64(x).unwrap()
    }

    #[test]
    fn case_examples() {
        assert_eq!(classify_case(2, 3, 1), CaseLabel::CaseI);
        assert_eq!(classify_case(3, 5, -1), CaseLabel::CaseII1);
        assert_eq!(classify_case(2, 3, -1), CaseLabel::CaseII2);
        assert_eq!(classify_case(2, 4, 1), CaseLabel::Uncovered);
        assert_eq!(classify_case(2, 4, -1), CaseLabel::Uncovered);
    }

    #[test]
    fn verdict_examples() {
        use InstabilityVerdict::*;
        assert_eq!(
            theorem_verdict(s(2.0), 3, 5, -1).unwrap(),
            UnstableAllC { tag: SubCase::II1i }
        );
        assert_eq!(
            theorem_verdict(s(1.5), 3, 4, -1).unwrap(),
            UnstableAllC { tag: SubCase::II1i }
        );
        assert_eq!(
            theorem_verdict(s(1.5), 4, 5, -1).unwrap(),
            UnstableAllC { tag: SubCase::II2i }
        );
        assert_eq!(theorem_verdict(s(2.0), 2, 3, 1).unwrap(), TheoremSilent);
        assert_eq!(
            theorem_verdict(s(2.0), 5, 7, 1).unwrap(),
            UnstableAllC { tag: SubCase::I1 }
        );
        assert_eq!(theorem_verdict(s(2.0), 2, 7, 1).unwrap().tag(), Some(SubCase::I2));
        assert_eq!(theorem_verdict(s(2.0), 7, 9, -1).unwrap().tag(), Some(SubCase::II1iii));
        assert_eq!(theorem_verdict(s(2.0), 2, 7, -1).unwrap().tag(), Some(SubCase::II2ii));
        assert!(matches!(
            theorem_verdict(s(2.0), 2, 4, 1),
            Err(Error::UncoveredCase { .. })
        ));
    }

    #[test]
    fn boundary_cases_use_exact_sigma() {
        // 2 sigma + 1 = 11/3 for sigma = 4/3: no integer power sits on it.
        let four_thirds = Sigma::new(4, 3).unwrap();
        assert_eq!(theorem_verdict(four_thirds, 3, 5, 1).unwrap().tag(), Some(SubCase::I2));
        assert_eq!(theorem_verdict(four_thirds, 4, 5, 1).unwrap().tag(), Some(SubCase::I1));
        // p = 2 sigma + 1 exactly: non-strict inequality applies.
        assert_eq!(theorem_verdict(s(1.0), 3, 5, 1).unwrap().tag(), Some(SubCase::I1));
        assert_eq!(theorem_verdict(s(1.0), 3, 4, -1).unwrap().tag(), Some(SubCase::II1ii));
        // q = 2 sigma + 1 in case II-2 is not covered by either clause.
        assert_eq!(theorem_verdict(s(1.0), 2, 3, -1).unwrap(), InstabilityVerdict::TheoremSilent);
    }

    #[test]
    fn verdict_text() {
        let v = theorem_verdict(s(2.0), 3, 5, -1).unwrap();
        assert_eq!(v.to_string(), "UnstableAllC / II-1-i");
    }

    #[test]
    fn empty_scan() {
        let rows = scan(&[s(2.0)], &[(2, 3)], &[1], &[], None, &SolverConfig::default());
        assert!(rows.is_empty());
    }

    #[test]
    fn scan_records_uncovered_rows() {
        let g = Grid::new(60.0, 512).unwrap();
        let rows = scan(&[s(2.0)], &[(2, 4)], &[1], &[1.0], Some(&g), &SolverConfig::default());
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].case, CaseLabel::Uncovered);
        assert!(rows[0].criterion.is_none());
        assert_ne!(rows[0].status, "ok");
    }
}
