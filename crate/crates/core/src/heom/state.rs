//! 2x2 operator blocks and the full ADO state.

use std::ops::{Add, AddAssign, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::space::HierarchySpace;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A 2x2 complex matrix stored row-major as `[b00, b01, b10, b11]`, in the
/// sigma_z eigenbasis with |+> first.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Block(pub [Complex64; 4]);

impl Block {
    pub const ZERO: Block = Block([ZERO; 4]);

    pub fn new(b00: Complex64, b01: Complex64, b10: Complex64, b11: Complex64) -> Self {
        Block([b00, b01, b10, b11])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Block([
            Complex64::new(m[0][0], 0.0),
            Complex64::new(m[0][1], 0.0),
            Complex64::new(m[1][0], 0.0),
            Complex64::new(m[1][1], 0.0),
        ])
    }

    pub fn identity() -> Self {
        Self::from_real([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn sigma_x() -> Self {
        Self::from_real([[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn sigma_z() -> Self {
        Self::from_real([[1.0, 0.0], [0.0, -1.0]])
    }

    /// |+><+|.
    pub fn plus_state() -> Self {
        Self::from_real([[1.0, 0.0], [0.0, 0.0]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0] + self.0[3]
    }

    pub fn dagger(&self) -> Self {
        let b = &self.0;
        Block([b[0].conj(), b[2].conj(), b[1].conj(), b[3].conj()])
    }

    pub fn matmul(&self, other: &Block) -> Block {
        let a = &self.0;
        let b = &other.0;
        Block([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }

    /// `<sigma_z> = Tr(sigma_z b)`.
    pub fn expect_z(&self) -> Complex64 {
        self.0[0] - self.0[3]
    }

    /// `<sigma_x> = Tr(sigma_x b)`.
    pub fn expect_x(&self) -> Complex64 {
        self.0[1] + self.0[2]
    }

    /// `[sigma_z, b]`.
    #[inline]
    pub fn commute_z(&self) -> Block {
        let b = &self.0;
        Block([ZERO, b[1] * 2.0, b[2] * -2.0, ZERO])
    }

    /// `{sigma_z, b}`.
    #[inline]
    pub fn anticommute_z(&self) -> Block {
        let b = &self.0;
        Block([b[0] * 2.0, ZERO, ZERO, b[3] * -2.0])
    }

    /// `[sigma_x, b]`.
    #[inline]
    pub fn commute_x(&self) -> Block {
        let b = &self.0;
        Block([b[2] - b[1], b[3] - b[0], b[0] - b[3], b[1] - b[2]])
    }

    pub fn scale(&self, c: Complex64) -> Block {
        let b = &self.0;
        Block([b[0] * c, b[1] * c, b[2] * c, b[3] * c])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entry of `b - b^dagger`.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.dagger()).max_abs()
    }

    /// Multiplies by `-i`.
    #[inline]
    pub fn times_minus_i(&self) -> Block {
        self.scale(-I)
    }
}

impl Add for Block {
    type Output = Block;
    #[inline]
    fn add(self, o: Block) -> Block {
        Block([
            self.0[0] + o.0[0],
            self.0[1] + o.0[1],
            self.0[2] + o.0[2],
            self.0[3] + o.0[3],
        ])
    }
}

impl Sub for Block {
    type Output = Block;
    #[inline]
    fn sub(self, o: Block) -> Block {
        Block([
            self.0[0] - o.0[0],
            self.0[1] - o.0[1],
            self.0[2] - o.0[2],
            self.0[3] - o.0[3],
        ])
    }
}

impl AddAssign for Block {
    #[inline]
    fn add_assign(&mut self, o: Block) {
        for k in 0..4 {
            self.0[k] += o.0[k];
        }
    }
}

impl Mul<f64> for Block {
    type Output = Block;
    #[inline]
    fn mul(self, c: f64) -> Block {
        Block([self.0[0] * c, self.0[1] * c, self.0[2] * c, self.0[3] * c])
    }
}

/// `[sigma_z, b]` on every ADO.
pub fn commute_z(state: &AdoState) -> AdoState {
    state.map(|b| b.commute_z())
}

/// Whether the ADO array represents a density matrix or the quasi-state produced by
/// applying a commutator to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Density,
    Quasi,
}

/// One 2x2 block per ADO, stored in [`HierarchySpace`] order.
#[derive(Debug, Clone)]
pub struct AdoState {
    space: Arc<HierarchySpace>,
    blocks: Vec<Block>,
    role: Role,
}

impl AdoState {
    pub fn zeros(space: Arc<HierarchySpace>, role: Role) -> Self {
        let n = space.len();
        Self {
            space,
            blocks: vec![Block::ZERO; n],
            role,
        }
    }

    /// The uncorrelated state: `rho0` on the zeroth ADO, zero elsewhere.
    pub fn product(space: Arc<HierarchySpace>, rho0: Block) -> Self {
        let mut s = Self::zeros(space, Role::Density);
        s.blocks[0] = rho0;
        s
    }

    pub fn from_blocks(space: Arc<HierarchySpace>, blocks: Vec<Block>, role: Role) -> Option<Self> {
        (blocks.len() == space.len()).then_some(Self {
            space,
            blocks,
            role,
        })
    }

    pub fn space(&self) -> &Arc<HierarchySpace> {
        &self.space
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn set_role(&mut self, role: Role) {
        self.role = role;
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Reduced density matrix (the zeroth ADO).
    pub fn project_rdm(&self) -> Block {
        self.blocks[0]
    }

    pub fn map(&self, f: impl Fn(&Block) -> Block) -> Self {
        Self {
            space: self.space.clone(),
            blocks: self.blocks.iter().map(f).collect(),
            role: Role::Quasi,
        }
    }

    /// Largest Frobenius-like block magnitude per hierarchy order.
    pub fn order_profile(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.space.depth() + 1];
        for (i, b) in self.blocks.iter().enumerate() {
            let h = self.space.order(i);
            out[h] = f64::max(out[h], b.max_abs());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(Block::is_finite)
    }
}
