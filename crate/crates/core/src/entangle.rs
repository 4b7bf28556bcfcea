//! Entanglement measures of the end-spin X-state, the search for the first
//! entanglement peak, and scaling fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freefermion::EndSpinState;

/// Bell state (or pair) realizing the fully entangled fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellTarget {
    PsiPlus,
    PsiMinus,
    /// Both Φ states overlap equally (weight `a`) with the X-state.
    PhiPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FefResult {
    pub fef: f64,
    pub argmax_bell: BellTarget,
}

/// `max(a, b + |c|)`: the Ψ± overlaps are `b ± c`, both Φ overlaps are `a`.
pub fn fully_entangled_fraction(state: &EndSpinState) -> FefResult {
    let psi = state.b + state.c.abs();
    if state.a > psi {
        FefResult {
            fef: state.a,
            argmax_bell: BellTarget::PhiPair,
        }
    } else {
        let argmax_bell = if state.c >= 0.0 {
            BellTarget::PsiPlus
        } else {
            BellTarget::PsiMinus
        };
        FefResult {
            fef: psi,
            argmax_bell,
        }
    }
}

/// Negativity of the partial transpose. For this X-structure the only
/// candidate negative eigenvalue is `a - |c|`.
pub fn negativity(state: &EndSpinState) -> f64 {
    (state.c.abs() - state.a).max(0.0)
}

/// Anything that can produce the end-spin state of a fixed chain at time t.
pub trait EndSpinDynamics {
    fn n_sites(&self) -> usize;
    fn end_spin_state(&self, t: f64) -> Result<EndSpinState>;

    fn fef(&self, t: f64) -> Result<f64> {
        Ok(fully_entangled_fraction(&self.end_spin_state(t)?).fef)
    }
}

impl<D: EndSpinDynamics + ?Sized> EndSpinDynamics for &D {
    fn n_sites(&self) -> usize {
        (**self).n_sites()
    }

    fn end_spin_state(&self, t: f64) -> Result<EndSpinState> {
        (**self).end_spin_state(t)
    }
}

/// Time-refinement target of the peak search, in units of 1/J.
pub const TMAX_RESOLUTION: f64 = 1e-6;
/// Coarsest scan step, in units of 1/J.
pub const MAX_GRID_STEP: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmaxResult {
    pub t_max: f64,
    pub fef_at_tmax: f64,
    pub scan_resolution: f64,
    pub horizon: f64,
    pub refined: bool,
}

/// Default search horizon `2N / (πJ)`.
pub fn default_horizon(n: usize, j: f64) -> f64 {
    2.0 * n as f64 / (std::f64::consts::PI * j)
}

/// Locates the first strict local maximum of the fully entangled fraction
/// that exceeds its t = 0 value.
///
/// The scan uses a uniform grid of step `min(0.02/J, horizon/2000)`; the
/// bracketing grid interval is then refined by golden-section search down to
/// `1e-6/J`.
pub fn find_tmax<D: EndSpinDynamics + ?Sized>(
    dynamics: &D,
    j: f64,
    horizon: Option<f64>,
) -> Result<TmaxResult> {
    let horizon = horizon.unwrap_or_else(|| default_horizon(dynamics.n_sites(), j));
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "search horizon must be positive, got {horizon}"
        )));
    }
    let step = (MAX_GRID_STEP / j).min(horizon / 2000.0);
    let points = (horizon / step).ceil() as usize;
    let at = |i: usize| i as f64 * step;

    let baseline = dynamics.fef(0.0)?;
    let mut prev = baseline;
    let mut cur = dynamics.fef(at(1))?;
    for i in 1..points {
        let next = dynamics.fef(at(i + 1))?;
        if cur > baseline && cur >= prev && cur > next {
            let (t_max, fef_at_tmax) = golden_section_max(
                dynamics,
                at(i - 1),
                at(i + 1),
                (at(i), cur),
                TMAX_RESOLUTION / j,
            )?;
            return Ok(TmaxResult {
                t_max,
                fef_at_tmax,
                scan_resolution: step,
                horizon,
                refined: true,
            });
        }
        prev = cur;
        cur = next;
    }
    Err(Error::NoMaximum { horizon })
}

/// Golden-section maximization on `[lo, hi]`; returns the best point seen,
/// which is never worse than `seed`.
fn golden_section_max<D: EndSpinDynamics + ?Sized>(
    dynamics: &D,
    mut lo: f64,
    mut hi: f64,
    seed: (f64, f64),
    tol: f64,
) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = seed;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = dynamics.fef(x1)?;
    let mut f2 = dynamics.fef(x2)?;
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > best.1 {
            best = (x, f);
        }
    }
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = dynamics.fef(x1)?;
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = dynamics.fef(x2)?;
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    Ok(best)
}

/// Ordinary least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "{} abscissae but {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            need: 2,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok(LinearFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

/// `fef ≈ amplitude · N^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub amplitude: f64,
    pub exponent: f64,
    pub fit_range: [f64; 2],
    /// RMS residual of `ln fef`.
    pub residual: f64,
    pub points: usize,
}

impl PowerLawFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.amplitude * n.powf(-self.exponent)
    }
}

/// Least-squares line through `(ln N, ln fef)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            need: 2,
            got: points.len(),
        });
    }
    for &(n, f) in points {
        if !(n > 0.0) {
            return Err(Error::NonPositive(n));
        }
        if !(f > 0.0) {
            return Err(Error::NonPositive(f));
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let line = linear_fit(&xs, &ys)?;
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    let exponent = -line.slope;
    if !exponent.is_finite() {
        return Err(Error::NumericalFault(
            "power-law exponent is not finite".into(),
        ));
    }
    Ok(PowerLawFit {
        amplitude: line.intercept.exp(),
        exponent,
        fit_range: [lo, hi],
        residual: line.residual,
        points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{PI, SQRT_2};

    fn x_state(a: f64, c: f64) -> EndSpinState {
        EndSpinState {
            a,
            b: 0.5 - a,
            c,
            t: 0.0,
        }
    }

    /// FEF(t) = sin²(√2 t), the three-site closed form.
    struct ThreeSite;

    impl EndSpinDynamics for ThreeSite {
        fn n_sites(&self) -> usize {
            3
        }
        fn end_spin_state(&self, t: f64) -> Result<EndSpinState> {
            let s2 = (SQRT_2 * t).sin().powi(2);
            EndSpinState::new(0.5 - 0.5 * s2, 0.5 * s2, t)
        }
    }

    #[test]
    fn fef_reference_states() {
        let neel = fully_entangled_fraction(&x_state(0.5, 0.0));
        assert_eq!(neel.fef, 0.5);
        assert_eq!(neel.argmax_bell, BellTarget::PhiPair);
        let psi = fully_entangled_fraction(&x_state(0.0, 0.5));
        assert_eq!(psi.fef, 1.0);
        assert_eq!(psi.argmax_bell, BellTarget::PsiPlus);
        assert_eq!(
            fully_entangled_fraction(&x_state(0.1, -0.3)).argmax_bell,
            BellTarget::PsiMinus
        );
    }

    #[test]
    fn negativity_reference_states() {
        assert_eq!(negativity(&x_state(0.5, 0.0)), 0.0);
        assert_eq!(negativity(&x_state(0.0, 0.5)), 0.5);
    }

    #[test]
    fn three_site_peak() {
        let r = find_tmax(&ThreeSite, 1.0, None).unwrap();
        assert!((r.t_max - PI / (2.0 * SQRT_2)).abs() < 1e-6, "{r:?}");
        assert!((r.fef_at_tmax - 1.0).abs() < 1e-10);
        assert!(r.refined);
        assert_eq!(r.scan_resolution, default_horizon(3, 1.0) / 2000.0);
        let again = find_tmax(&ThreeSite, 1.0, None).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn short_horizon_has_no_peak() {
        assert!(matches!(
            find_tmax(&ThreeSite, 1.0, Some(0.5)),
            Err(Error::NoMaximum { .. })
        ));
        assert!(find_tmax(&ThreeSite, 1.0, Some(-1.0)).is_err());
    }

    #[test]
    fn exact_power_law_round_trip() {
        let pts: Vec<(f64, f64)> = (25..=241)
            .step_by(24)
            .map(|n| (n as f64, 1.42 * (n as f64).powf(-0.22)))
            .collect();
        let fit = fit_power_law(&pts).unwrap();
        assert!((fit.amplitude - 1.42).abs() < 1e-12);
        assert!((fit.exponent - 0.22).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.fit_range, [25.0, 241.0]);
    }

    #[test]
    fn two_point_fit_interpolates() {
        let fit = fit_power_law(&[(25.0, 0.77), (49.0, 0.68)]).unwrap();
        assert!((fit.eval(25.0) - 0.77).abs() < 1e-14);
        assert!((fit.eval(49.0) - 0.68).abs() < 1e-14);
        assert!(fit.residual < 1e-15);
    }

    #[test]
    fn bad_fit_inputs() {
        assert!(matches!(
            fit_power_law(&[(3.0, 0.5)]),
            Err(Error::InsufficientData { .. })
        ));
        assert!(matches!(
            fit_power_law(&[(3.0, 0.5), (5.0, 0.0)]),
            Err(Error::NonPositive(_))
        ));
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }

    proptest! {
        #[test]
        fn fef_ignores_coherence_sign(a in 0.0f64..=0.5, frac in -1.0f64..=1.0) {
            let c = frac * (0.5 - a);
            prop_assert_eq!(
                fully_entangled_fraction(&x_state(a, c)).fef,
                fully_entangled_fraction(&x_state(a, -c)).fef
            );
        }

        #[test]
        fn purifiable_implies_entangled(a in 0.0f64..=0.5, frac in -1.0f64..=1.0) {
            let s = x_state(a, frac * (0.5 - a));
            let fef = fully_entangled_fraction(&s).fef;
            prop_assert!(fef >= 0.25);
            if fef > 0.5 {
                prop_assert!(negativity(&s) > 0.0);
            }
        }
    }
}
