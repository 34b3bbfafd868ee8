//! Brute-force hierarchy generator indexed by raw index sequences.
//!
//! Each ADO is addressed by an ordered list of real-part indices and an ordered list of
//! imaginary-part indices. Every sum over positions `j` is expanded literally, with no
//! use of permutation symmetry.

use num_complex::Complex64;
use sbheom::decomp::CorrelationFit;
use sbheom::heom::{Block, HierarchySpace};

pub type Sequence = (Vec<usize>, Vec<usize>);

/// All sequence pairs with total length at most `depth`.
pub fn all_sequences(n_real: usize, n_imag: usize, depth: usize) -> Vec<Sequence> {
    fn words(alphabet: usize, len: usize) -> Vec<Vec<usize>> {
        if len == 0 {
            return vec![vec![]];
        }
        if alphabet == 0 {
            return vec![];
        }
        let mut out = Vec::new();
        for w in words(alphabet, len - 1) {
            for a in 0..alphabet {
                let mut v = w.clone();
                v.push(a);
                out.push(v);
            }
        }
        out
    }
    let mut out = Vec::new();
    for k in 0..=depth {
        for l in 0..=depth - k {
            for r in words(n_real, k) {
                for i in words(n_imag, l) {
                    out.push((r.clone(), i));
                }
            }
        }
    }
    out
}

/// Occupation vector (real slots first) of a sequence pair.
pub fn occupation(seq: &Sequence, n_real: usize, n_imag: usize) -> Vec<u8> {
    let mut occ = vec![0u8; n_real + n_imag];
    for &n in &seq.0 {
        occ[n] += 1;
    }
    for &m in &seq.1 {
        occ[n_real + m] += 1;
    }
    occ
}

/// Derivative of the ADO `seq` for a symmetric state given in occupation form.
pub fn sequence_derivative(
    seq: &Sequence,
    blocks: &[Block],
    space: &HierarchySpace,
    fit: &CorrelationFit,
    delta: f64,
) -> Block {
    let (nr, ni) = (fit.n_real(), fit.n_imag());
    let depth = space.depth();
    let get = |s: &Sequence| blocks[space.position(&occupation(s, nr, ni)).expect("in space")];
    let mi = Complex64::new(0.0, -1.0);
    let this = get(seq);
    let mut out = this.commute_x().scale(Complex64::new(0.0, -delta));
    let (r, i) = seq;
    // closure mixing: replace one entry by every index of the same group
    for j in 0..r.len() {
        for n2 in 0..nr {
            let eta = fit.real.eta[r[j]][n2];
            if eta != 0.0 {
                let mut moved = r.clone();
                moved[j] = n2;
                out += get(&(moved, i.clone())) * eta;
            }
        }
    }
    for j in 0..i.len() {
        for m2 in 0..ni {
            let eta = fit.imag.eta[i[j]][m2];
            if eta != 0.0 {
                let mut moved = i.clone();
                moved[j] = m2;
                out += get(&(r.clone(), moved)) * eta;
            }
        }
    }
    // removal of one entry
    for j in 0..r.len() {
        let phi0 = fit.real.basis[r[j]].at_zero();
        let mut rest = r.clone();
        rest.remove(j);
        out += get(&(rest, i.clone())).commute_z().scale(mi) * phi0;
    }
    for j in 0..i.len() {
        let phi0 = fit.imag.basis[i[j]].at_zero();
        let mut rest = i.clone();
        rest.remove(j);
        out += get(&(r.clone(), rest)).anticommute_z() * phi0;
    }
    // appending one entry
    if r.len() + i.len() < depth {
        for n2 in 0..nr {
            let mut more = r.clone();
            more.push(n2);
            out += get(&(more, i.clone())).commute_z().scale(mi) * fit.real.coefficients[n2];
        }
        for m2 in 0..ni {
            let mut more = i.clone();
            more.push(m2);
            out += get(&(r.clone(), more)).commute_z().scale(mi) * fit.imag.coefficients[m2];
        }
    }
    out
}

/// Largest difference between the occupation-form generator and the sequence form, over
/// every one-hot input state.
pub fn occupation_form_discrepancy(
    gen: &sbheom::heom::Generator,
    fit: &CorrelationFit,
    delta: f64,
) -> f64 {
    let space = gen.space().clone();
    let sequences = all_sequences(fit.n_real(), fit.n_imag(), space.depth());
    let mut worst = 0.0f64;
    for i in 0..space.len() {
        for entry in 0..4 {
            let mut blocks = vec![Block::ZERO; space.len()];
            blocks[i].0[entry] = Complex64::new(1.0, 0.0);
            let mut out = vec![Block::ZERO; space.len()];
            gen.apply_into(&blocks, &mut out);
            for seq in &sequences {
                let pos = space
                    .position(&occupation(seq, fit.n_real(), fit.n_imag()))
                    .expect("sequence in space");
                let oracle = sequence_derivative(seq, &blocks, &space, fit, delta);
                worst = worst.max((oracle - out[pos]).max_abs());
            }
        }
    }
    worst
}
