//! Parameter studies over pulse width `T`, photon number `N` and coupling ratio `a`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::counting::{photon_stats, CutoffPolicy, Method, PhotonStats};
use crate::error::{Error, Result};
use crate::liouville::{DriveSpec, Topology};

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub width: f64,
    /// Photon number; the maximizer `N*` for optimization sweeps.
    pub photons: f64,
    /// Coupling ratio for two-line sweeps.
    pub ratio: Option<f64>,
    pub stats: PhotonStats<f64>,
    /// Set when `N*` sits on the edge of the search range.
    pub at_boundary: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    /// Named parameter grids, in iteration order (outermost first).
    pub axes: Vec<(String, Vec<f64>)>,
    pub records: Vec<SweepRecord>,
    pub metadata: Vec<(String, String)>,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect();
    if let (Some(first), Some(last)) = (v.first_mut(), n.checked_sub(1)) {
        *first = lo;
        if last > 0 {
            v[last] = hi;
        }
    }
    v
}

/// `T ∈ [0.05, 5]`, 40 log-spaced points.
pub fn default_width_grid() -> Vec<f64> {
    logspace(0.05, 5.0, 40)
}

/// `N ∈ [0, 120]`, 120 linear points.
pub fn default_photon_grid() -> Vec<f64> {
    linspace(0.0, 120.0, 120)
}

/// `a ∈ [0.005, 1]`, 30 log-spaced points.
pub fn default_ratio_grid() -> Vec<f64> {
    logspace(0.005, 1.0, 30)
}

/// Photon number of a resonant π-pulse of width `T`: area `√(2NT)` for a
/// single line and `√(4aNT)` for two lines.
pub fn pi_pulse_photons(topology: &Topology<f64>, width: f64) -> f64 {
    match *topology {
        Topology::SingleLine { .. } => PI * PI / (2.0 * width),
        Topology::TwoLine { ratio, .. } => PI * PI / (4.0 * ratio * width),
    }
}

/// Pulse area in radians of a resonant square pulse.
pub fn pulse_area(topology: &Topology<f64>, width: f64, photons: f64) -> f64 {
    match *topology {
        Topology::SingleLine { .. } => (2.0 * photons * width).sqrt(),
        Topology::TwoLine { ratio, .. } => (4.0 * ratio * photons * width).sqrt(),
    }
}

fn at_point<R>(point: String, r: Result<R>) -> Result<R> {
    r.map_err(|e| Error::AtGridPoint { point, source: Box::new(e) })
}

fn metadata(template: &str, policy: &CutoffPolicy, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut m = vec![
        ("template".to_string(), template.to_string()),
        ("window".to_string(), "t_end = T + 12/(total decay rate)".to_string()),
        (
            "cutoff".to_string(),
            format!(
                "k from {} by {} up to {}, C(k, k/2) N_k < {:e}",
                policy.start, policy.step, policy.max, policy.threshold
            ),
        ),
    ];
    m.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    m
}

/// Grid sweep over `(T, N)` for a given topology, `T` outermost.
pub fn sweep_grid(
    topology: Topology<f64>,
    widths: &[f64],
    photons: &[f64],
    policy: CutoffPolicy,
) -> Result<SweepResult> {
    let points: Vec<(f64, f64)> = widths.iter().flat_map(|&t| photons.iter().map(move |&n| (t, n))).collect();
    let ratio = match topology {
        Topology::TwoLine { ratio, .. } => Some(ratio),
        Topology::SingleLine { .. } => None,
    };
    let records = points
        .par_iter()
        .map(|&(t, n)| {
            let point = format!("T={t}, N={n}");
            let spec = at_point(point.clone(), DriveSpec::square(topology, t, n))?;
            let stats = at_point(point, photon_stats(&spec, Method::MomentInversion, policy))?;
            Ok(SweepRecord { width: t, photons: n, ratio, stats, at_boundary: false })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axes: vec![("T".into(), widths.to_vec()), ("N".into(), photons.to_vec())],
        records,
        metadata: metadata(&format!("{topology:?}, square pulse"), &policy, &[]),
    })
}

/// Resonant single-line sweep over `(T, N)`.
pub fn sweep_single_line(widths: &[f64], photons: &[f64], policy: CutoffPolicy) -> Result<SweepResult> {
    sweep_grid(Topology::single(), widths, photons, policy)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaximizeOptions {
    /// Points in the initial scan (at least 64).
    pub coarse_points: usize,
    /// Golden-section stopping rule on `ΔN / N`.
    pub rel_tol: f64,
    /// While the best scanned point is the upper end of the range, extend
    /// the scan by one range width (at most [`MAX_WIDEN`] times).
    pub widen: bool,
}

pub const MAX_WIDEN: usize = 6;

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self { coarse_points: 64, rel_tol: 1e-3, widen: false }
    }
}

impl MaximizeOptions {
    /// First Rabi lobe `[0, 1.5 N_π]`.
    pub fn photon_range(&self, topology: &Topology<f64>, width: f64) -> (f64, f64) {
        (0.0, 1.5 * pi_pulse_photons(topology, width))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct P1Maximum {
    pub n_star: f64,
    pub stats: PhotonStats<f64>,
    pub at_boundary: bool,
}

/// Maximizes `P_1` over the square-pulse photon number of `template`:
/// a coarse scan, then golden-section refinement around the leftmost best point.
pub fn maximize_p1(
    template: &DriveSpec<f64>,
    range: (f64, f64),
    opts: MaximizeOptions,
    policy: CutoffPolicy,
) -> Result<P1Maximum> {
    let (lo, hi) = range;
    if !(hi > lo && lo >= 0.0) {
        return Err(Error::InvalidSpec(format!("photon range [{lo}, {hi}] is empty")));
    }
    let eval = |n: f64| -> Result<PhotonStats<f64>> {
        at_point(format!("N={n}"), photon_stats(&template.with_photons(n)?, Method::MomentInversion, policy))
    };
    let points = opts.coarse_points.max(64);
    let mut grid = linspace(lo, hi, points);
    let mut scanned = grid.iter().map(|&n| eval(n)).collect::<Result<Vec<_>>>()?;
    let leftmost_best = |scanned: &[PhotonStats<f64>]| {
        let best_p = scanned.iter().map(|s| s.p(1)).fold(f64::NEG_INFINITY, f64::max);
        scanned.iter().position(|s| s.p(1) >= best_p - 1e-9).expect("non-empty scan")
    };
    let mut i = leftmost_best(&scanned);
    let mut extensions = 0;
    while opts.widen && i + 1 == grid.len() && extensions < MAX_WIDEN {
        extensions += 1;
        let start = grid[grid.len() - 1];
        for n in linspace(start, start + (hi - lo), points + 1).into_iter().skip(1) {
            scanned.push(eval(n)?);
            grid.push(n);
        }
        i = leftmost_best(&scanned);
    }
    let at_boundary = i == 0 || i + 1 == grid.len();

    let mut best = (grid[i], scanned[i].clone());
    let (mut a, mut b) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut s1 = eval(x1)?;
    let mut s2 = eval(x2)?;
    while b - a > opts.rel_tol * best.0.max(x1).max(1e-12) {
        if s1.p(1) >= s2.p(1) {
            b = x2;
            x2 = x1;
            s2 = s1;
            x1 = b - inv_phi * (b - a);
            s1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            s1 = s2;
            x2 = a + inv_phi * (b - a);
            s2 = eval(x2)?;
        }
    }
    for (x, s) in [(x1, s1), (x2, s2)] {
        if s.p(1) > best.1.p(1) {
            best = (x, s);
        }
    }
    Ok(P1Maximum { n_star: best.0, stats: best.1, at_boundary })
}

/// For every `(a, T)`, maximizes `P_1` over `N` and records the distribution at `N*`.
pub fn sweep_two_line(
    ratios: &[f64],
    widths: &[f64],
    opts: MaximizeOptions,
    policy: CutoffPolicy,
) -> Result<SweepResult> {
    let points: Vec<(f64, f64)> = ratios.iter().flat_map(|&a| widths.iter().map(move |&t| (a, t))).collect();
    let records = points
        .par_iter()
        .map(|&(a, t)| {
            let point = format!("a={a}, T={t}");
            let topo = Topology::two_line(a);
            let template = at_point(point.clone(), DriveSpec::square(topo, t, 0.0))?;
            let best = at_point(point, maximize_p1(&template, opts.photon_range(&topo, t), opts, policy))?;
            Ok(SweepRecord {
                width: t,
                photons: best.n_star,
                ratio: Some(a),
                stats: best.stats,
                at_boundary: best.at_boundary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axes: vec![("a".into(), ratios.to_vec()), ("T".into(), widths.to_vec())],
        records,
        metadata: metadata(
            "two lines, square pulse, N = argmax P_1",
            &policy,
            &[(
                "search",
                format!("{} coarse points, rel tol {:e}, widen {}", opts.coarse_points, opts.rel_tol, opts.widen),
            )],
        ),
    })
}

/// Named preset sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Single line, `P_n` over the default `(T, N)` grid.
    Fig2,
    /// Single line at `T = 0.1` over the default `N` grid.
    Fig3,
    /// Two lines at `T = 0.1`, `a ∈ {0.01, 0.5}`, `N` covering the same
    /// pulse-area range as `Fig3`.
    Fig4,
    /// Two lines, max-over-`N` `P_1` over the default `(a, T)` grid.
    Fig5,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            "fig4" => Ok(Preset::Fig4),
            "fig5" => Ok(Preset::Fig5),
            other => Err(Error::InvalidSpec(format!("unknown preset '{other}' (expected fig2|fig3|fig4|fig5)"))),
        }
    }
}

pub fn run_preset(preset: Preset, policy: CutoffPolicy, opts: MaximizeOptions) -> Result<SweepResult> {
    match preset {
        Preset::Fig2 => sweep_single_line(&default_width_grid(), &default_photon_grid(), policy),
        Preset::Fig3 => sweep_single_line(&[0.1], &default_photon_grid(), policy),
        Preset::Fig4 => {
            let width = 0.1;
            let mut out: Option<SweepResult> = None;
            for a in [0.01, 0.5] {
                // same area range as N ∈ [0, 120] on a single line: 4aN = 2·120
                let photons = linspace(0.0, 60.0 / a, 120);
                let part = sweep_grid(Topology::two_line(a), &[width], &photons, policy)?;
                out = Some(match out {
                    None => part,
                    Some(mut acc) => {
                        acc.records.extend(part.records);
                        acc.axes.extend(part.axes.into_iter().skip(1));
                        acc
                    }
                });
            }
            let mut res = out.expect("two ratios");
            res.axes.insert(0, ("a".into(), vec![0.01, 0.5]));
            Ok(res)
        }
        Preset::Fig5 => sweep_two_line(&default_ratio_grid(), &default_width_grid(), opts, policy),
    }
}

/// Local maxima of `P_1` along `N` within one `T` row of a grid sweep.
pub fn p1_ridges(records: &[SweepRecord]) -> Vec<usize> {
    let p: Vec<f64> = records.iter().map(|r| r.stats.p(1)).collect();
    (1..p.len().saturating_sub(1)).filter(|&i| p[i] > p[i - 1] && p[i] >= p[i + 1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let t = default_width_grid();
        assert_eq!(t.len(), 40);
        assert_eq!((t[0], t[39]), (0.05, 5.0));
        let n = default_photon_grid();
        assert_eq!((n.len(), n[0], n[119]), (120, 0.0, 120.0));
        let a = default_ratio_grid();
        assert_eq!((a.len(), a[0], a[29]), (30, 0.005, 1.0));
    }

    #[test]
    fn zero_photon_column_is_vacuum() {
        let res = sweep_single_line(&[0.05, 0.5, 5.0], &[0.0], CutoffPolicy::default()).unwrap();
        for r in &res.records {
            assert_eq!(r.stats.p(0), 1.0);
        }
    }

    #[test]
    fn single_line_pi_pulse_optimum() {
        let template = DriveSpec::<f64>::square(Topology::single(), 0.1, 0.0).unwrap();
        let opts = MaximizeOptions::default();
        let best =
            maximize_p1(&template, opts.photon_range(&template.topology, 0.1), opts, CutoffPolicy::default()).unwrap();
        assert!((best.stats.p(1) - 0.5).abs() < 0.03);
        assert!((best.n_star / pi_pulse_photons(&template.topology, 0.1) - 1.0).abs() < 0.3);
        assert!(!best.at_boundary);
    }

    #[test]
    fn boundary_maximum_is_flagged() {
        let template = DriveSpec::<f64>::square(Topology::single(), 0.1, 0.0).unwrap();
        let best = maximize_p1(&template, (0.0, 20.0), MaximizeOptions::default(), CutoffPolicy::default()).unwrap();
        assert!(best.at_boundary);
        assert!((best.n_star - 20.0).abs() < 0.5);
    }

    #[test]
    fn widening_follows_an_edge_maximum() {
        let topo = Topology::two_line(1.0);
        let template = DriveSpec::<f64>::square(topo, 5.0, 0.0).unwrap();
        let policy = CutoffPolicy::default();
        let narrow = MaximizeOptions::default();
        let range = narrow.photon_range(&topo, 5.0);
        let edge = maximize_p1(&template, range, narrow, policy).unwrap();
        assert!(edge.at_boundary);
        let wide = maximize_p1(&template, range, MaximizeOptions { widen: true, ..narrow }, policy).unwrap();
        assert!(!wide.at_boundary);
        assert!(wide.n_star > range.1 && wide.stats.p(1) > edge.stats.p(1));
    }

    #[test]
    fn two_line_ordering() {
        let opts = MaximizeOptions::default();
        let res = sweep_two_line(&[0.01, 0.5], &[0.1], opts, CutoffPolicy::default()).unwrap();
        let (strong, weak) = (res.records[0].stats.p(1), res.records[1].stats.p(1));
        assert!(strong >= 0.9);
        assert!(weak < strong && weak > 0.5);
    }

    #[test]
    fn preset_parsing() {
        assert_eq!("fig3".parse::<Preset>().unwrap(), Preset::Fig3);
        assert!("fig9".parse::<Preset>().is_err());
    }
}
