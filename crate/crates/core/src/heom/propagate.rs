//! Fixed-step RK4 integration of the hierarchy.

use log::warn;
use serde::{Deserialize, Serialize};

use super::generator::Generator;
use super::state::{AdoState, Block};
use crate::error::{Error, Result};

/// RK4 is stable on the imaginary axis up to about 2.83.
pub const RK4_STABILITY_MARGIN: f64 = 2.8;

const OVERFLOW: f64 = 1e150;

/// Integration window: `t_end / dt` steps, recording every `stride` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
}

impl Span {
    pub fn new(t_end: f64, dt: f64, stride: usize) -> Self {
        Self { t_end, dt, stride }
    }

    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || self.stride == 0 {
            return Err(Error::Domain(format!(
                "invalid span t_end={}, dt={}, stride={}",
                self.t_end, self.dt, self.stride
            )));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::Domain(format!(
                "t_end={} is not a multiple of dt={}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }

    /// Spacing of recorded samples.
    pub fn record_dt(&self) -> f64 {
        self.dt * self.stride as f64
    }
}

/// Reduced density matrices recorded during a propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub rdm: Vec<Block>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Spacing between recorded samples.
    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub trajectory: Trajectory,
    pub state: AdoState,
    /// `dt` times the spectral-radius estimate.
    pub stability_number: f64,
    pub warnings: Vec<String>,
}

/// Propagates `state` over `span`, recording the reduced density matrix.
pub fn propagate(state: AdoState, gen: &Generator, span: &Span) -> Result<Propagation> {
    propagate_with(state, gen, span, |_, _| {})
}

/// As [`propagate`], also calling `observer` with the full state at every recorded step.
pub fn propagate_with(
    mut state: AdoState,
    gen: &Generator,
    span: &Span,
    mut observer: impl FnMut(f64, &AdoState),
) -> Result<Propagation> {
    let steps = span.steps()?;
    let n = gen.space().len();
    if state.len() != n {
        return Err(Error::Mismatch(format!(
            "state holds {} ADOs, generator expects {n}",
            state.len()
        )));
    }
    let mut warnings = Vec::new();
    let stability_number = span.dt * gen.spectral_radius_estimate();
    if stability_number > RK4_STABILITY_MARGIN {
        let msg = format!(
            "dt={} times spectral radius estimate is {:.3}, above the RK4 margin {RK4_STABILITY_MARGIN}",
            span.dt, stability_number
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    let filter = gen.rescaling().filter.filter(|_| gen.rescaling().enabled);

    let dt = span.dt;
    let mut k1 = vec![Block::ZERO; n];
    let mut k2 = vec![Block::ZERO; n];
    let mut k3 = vec![Block::ZERO; n];
    let mut k4 = vec![Block::ZERO; n];
    let mut tmp = vec![Block::ZERO; n];

    let mut times = Vec::with_capacity(steps / span.stride + 1);
    let mut rdm = Vec::with_capacity(steps / span.stride + 1);
    times.push(0.0);
    rdm.push(state.project_rdm());
    observer(0.0, &state);

    for step in 1..=steps {
        let y = state.blocks_mut();
        gen.apply_into(y, &mut k1);
        axpy(&mut tmp, y, &k1, 0.5 * dt);
        gen.apply_into(&tmp, &mut k2);
        axpy(&mut tmp, y, &k2, 0.5 * dt);
        gen.apply_into(&tmp, &mut k3);
        axpy(&mut tmp, y, &k3, dt);
        gen.apply_into(&tmp, &mut k4);
        let w = dt / 6.0;
        for i in 0..n {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
        if let Some(threshold) = filter {
            for b in y.iter_mut().skip(1) {
                if b.max_abs() < threshold {
                    *b = Block::ZERO;
                }
            }
        }
        let t = step as f64 * dt;
        let zeroth = y[0];
        if !zeroth.is_finite() || zeroth.max_abs() > OVERFLOW {
            return Err(Error::Divergence {
                time: t,
                detail: "reduced density matrix became non-finite".into(),
            });
        }
        if step % span.stride == 0 {
            if let Some(i) = y
                .iter()
                .position(|b| !b.is_finite() || b.max_abs() > OVERFLOW)
            {
                return Err(Error::Divergence {
                    time: t,
                    detail: format!("ADO {i} became non-finite"),
                });
            }
            times.push(t);
            rdm.push(zeroth);
            observer(t, &state);
        }
    }
    Ok(Propagation {
        trajectory: Trajectory { times, rdm },
        state,
        stability_number,
        warnings,
    })
}

fn axpy(out: &mut [Block], y: &[Block], k: &[Block], h: f64) {
    for ((o, a), b) in out.iter_mut().zip(y).zip(k) {
        *o = *a + *b * h;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::decomp::CorrelationFit;
    use crate::heom::generator::{Rescaling, SystemSpec};
    use crate::heom::space::{enumerate_space, DEFAULT_ADO_BUDGET};

    fn closed(delta: f64) -> (Arc<crate::heom::HierarchySpace>, Generator) {
        let space = Arc::new(enumerate_space(0, 0, 0, DEFAULT_ADO_BUDGET).unwrap());
        let gen = Generator::new(
            space.clone(),
            &CorrelationFit::uncoupled(),
            SystemSpec::new(delta),
            Rescaling::default(),
        )
        .unwrap();
        (space, gen)
    }

    #[test]
    fn rabi_oscillation() {
        let (space, gen) = closed(1.0);
        let state = AdoState::product(space, Block::plus_state());
        let p = propagate(state, &gen, &Span::new(20.0, 1e-3, 10)).unwrap();
        let err = p
            .trajectory
            .times
            .iter()
            .zip(&p.trajectory.rdm)
            .map(|(t, b)| (b.expect_z().re - (2.0 * t).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn half_rabi_period_flips_spin() {
        let delta = 0.5;
        let (space, gen) = closed(delta);
        let t = std::f64::consts::PI / (2.0 * delta);
        let dt = t / 4000.0;
        let p = propagate(
            AdoState::product(space, Block::plus_state()),
            &gen,
            &Span::new(t, dt, 4000),
        )
        .unwrap();
        let minus = Block::from_real([[0.0, 0.0], [0.0, 1.0]]);
        assert!((p.state.project_rdm() - minus).max_abs() < 1e-6);
    }

    #[test]
    fn span_must_divide() {
        assert!(Span::new(1.0, 0.3, 1).steps().is_err());
        assert_eq!(Span::new(1.0, 0.25, 1).steps().unwrap(), 4);
    }

    #[test]
    fn large_step_warns() {
        let (space, gen) = closed(10.0);
        let p = propagate(
            AdoState::product(space, Block::plus_state()),
            &gen,
            &Span::new(1.0, 0.5, 1),
        )
        .unwrap();
        assert_eq!(p.warnings.len(), 1);
    }
}
