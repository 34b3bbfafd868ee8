//! Matrix-free action of the extended hierarchy generator in occupation form.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::space::{HierarchySpace, NO_NEIGHBOR};
use super::state::{AdoState, Block};
use crate::decomp::{BasisFunction, CorrelationFit};
use crate::error::{Error, Result};

const PARALLEL_THRESHOLD: usize = 4096;

/// Two-level system `H_S = Delta sigma_x`, coupled to the bath through sigma_z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub delta: f64,
    /// Dipole scale mu_E; the response function scales with its square.
    #[serde(default = "one")]
    pub dipole: f64,
}

fn one() -> f64 {
    1.0
}

impl SystemSpec {
    pub fn new(delta: f64) -> Self {
        Self { delta, dipole: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::Domain(format!(
                "delta must be non-negative, got {}",
                self.delta
            )));
        }
        if !self.dipole.is_finite() {
            return Err(Error::Domain("dipole must be finite".into()));
        }
        Ok(())
    }
}

/// Optional rescaling of ADOs by `sqrt(|a|^occ occ!)` and small-amplitude filtering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Rescaling {
    pub enabled: bool,
    /// Blocks (above order zero) whose largest entry falls below this are zeroed after each step.
    pub filter: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SlotKind {
    Real,
    Imag,
}

#[derive(Debug, Clone)]
struct Slot {
    kind: SlotKind,
    a: f64,
    phi0: f64,
    eta_diag: f64,
    /// Off-diagonal closure entries `(k', eta_kk')` with global slot numbering.
    moves: Vec<(usize, f64)>,
    /// Rescaling factor per unit occupation (1 when rescaling is off).
    c: f64,
}

/// Generator of the hierarchy for a given fit and system.
#[derive(Debug, Clone)]
pub struct Generator {
    space: Arc<HierarchySpace>,
    sys: SystemSpec,
    slots: Vec<Slot>,
    rescaling: Rescaling,
    sqrt_int: Vec<f64>,
}

impl Generator {
    pub fn new(
        space: Arc<HierarchySpace>,
        fit: &CorrelationFit,
        sys: SystemSpec,
        rescaling: Rescaling,
    ) -> Result<Self> {
        sys.validate()?;
        if space.n_real() != fit.n_real() || space.n_imag() != fit.n_imag() {
            return Err(Error::Mismatch(format!(
                "hierarchy built for N_R={}, N_I={} but fit has N_R={}, N_I={}",
                space.n_real(),
                space.n_imag(),
                fit.n_real(),
                fit.n_imag()
            )));
        }
        let mut slots = Vec::with_capacity(space.n_slots());
        for (kind, part, offset) in [
            (SlotKind::Real, &fit.real, 0),
            (SlotKind::Imag, &fit.imag, fit.n_real()),
        ] {
            for (n, basis) in part.basis.iter().enumerate() {
                let a = part.coefficients[n];
                let moves = part.eta[n]
                    .iter()
                    .enumerate()
                    .filter(|&(m, &e)| m != n && e != 0.0)
                    .map(|(m, &e)| (offset + m, e))
                    .collect();
                let c = if rescaling.enabled && a != 0.0 {
                    a.abs().sqrt()
                } else {
                    1.0
                };
                slots.push(Slot {
                    kind,
                    a,
                    phi0: basis.at_zero(),
                    eta_diag: part.eta[n][n],
                    moves,
                    c,
                });
            }
        }
        let sqrt_int = (0..=space.depth() + 1).map(|n| (n as f64).sqrt()).collect();
        Ok(Self {
            space,
            sys,
            slots,
            rescaling,
            sqrt_int,
        })
    }

    pub fn space(&self) -> &Arc<HierarchySpace> {
        &self.space
    }

    pub fn system(&self) -> SystemSpec {
        self.sys
    }

    pub fn rescaling(&self) -> Rescaling {
        self.rescaling
    }

    /// Computes the time derivative of `state`.
    pub fn apply(&self, state: &AdoState) -> Result<AdoState> {
        if state.len() != self.space.len() || state.space().n_slots() != self.space.n_slots() {
            return Err(Error::Mismatch(
                "state and generator use different hierarchies".into(),
            ));
        }
        let mut out = AdoState::zeros(self.space.clone(), state.role());
        self.apply_into(state.blocks(), out.blocks_mut());
        Ok(out)
    }

    /// Writes the derivative of `input` into `output`; both are in enumeration order.
    pub fn apply_into(&self, input: &[Block], output: &mut [Block]) {
        assert_eq!(input.len(), self.space.len());
        assert_eq!(output.len(), self.space.len());
        if output.len() >= PARALLEL_THRESHOLD {
            output
                .par_chunks_mut(512)
                .enumerate()
                .for_each(|(c, chunk)| {
                    for (j, out) in chunk.iter_mut().enumerate() {
                        *out = self.derivative_at(c * 512 + j, input);
                    }
                });
        } else {
            for (i, out) in output.iter_mut().enumerate() {
                *out = self.derivative_at(i, input);
            }
        }
    }

    #[inline]
    fn derivative_at(&self, i: usize, input: &[Block]) -> Block {
        let space = &*self.space;
        let occ = space.occupations(i);
        let b = input[i];
        let mut diag = 0.0;
        let mut same = Block::ZERO;
        let mut comm = Block::ZERO;
        let mut anti = Block::ZERO;
        let scaled = self.rescaling.enabled;
        for (k, slot) in self.slots.iter().enumerate() {
            let p = occ[k] as usize;
            let up = space.raise_raw(i, k);
            if up != NO_NEIGHBOR && slot.a != 0.0 {
                let w = if scaled {
                    slot.a * slot.c * self.sqrt_int[p + 1]
                } else {
                    slot.a
                };
                comm += input[up as usize] * w;
            }
            if p == 0 {
                continue;
            }
            diag += p as f64 * slot.eta_diag;
            let lo = space.lower_raw(i, k) as usize;
            if slot.phi0 != 0.0 {
                let w = if scaled {
                    self.sqrt_int[p] * slot.phi0 / slot.c
                } else {
                    p as f64 * slot.phi0
                };
                match slot.kind {
                    SlotKind::Real => comm += input[lo] * w,
                    SlotKind::Imag => anti += input[lo] * w,
                }
            }
            for &(k2, eta) in &slot.moves {
                let j = space.raise_raw(lo, k2) as usize;
                let w = if scaled {
                    let p2 = occ[k2] as usize;
                    eta * self.slots[k2].c / slot.c * self.sqrt_int[p] * self.sqrt_int[p2 + 1]
                } else {
                    p as f64 * eta
                };
                same += input[j] * w;
            }
        }
        let system = b.commute_x().scale(Complex64::new(0.0, -self.sys.delta));
        system + b * diag + same + comm.commute_z().times_minus_i() + anti.anticommute_z()
    }

    /// Heuristic bound on the generator's spectral radius, used for the RK4 stability check.
    pub fn spectral_radius_estimate(&self) -> f64 {
        let h = self.space.depth() as f64;
        let mut eta_row: f64 = 0.0;
        let mut coupling = 0.0;
        for slot in &self.slots {
            let row = slot.eta_diag.abs() + slot.moves.iter().map(|(_, e)| e.abs()).sum::<f64>();
            eta_row = eta_row.max(row);
            coupling += 2.0 * (slot.a * slot.phi0).abs().sqrt();
        }
        2.0 * self.sys.delta + h * eta_row + h.sqrt() * coupling
    }

    /// Rates of all basis functions, for diagnostics.
    pub fn rates(fit: &CorrelationFit) -> Vec<f64> {
        fit.real
            .basis
            .iter()
            .chain(&fit.imag.basis)
            .map(BasisFunction::rate)
            .collect()
    }
}
