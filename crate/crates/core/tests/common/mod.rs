//! Shared test oracles, independent of the library's operator-assembly code:
//! a brute-force Kronecker-product constructor and an ideal-limit unitary
//! evaluator (hard detuning exclusion, perfect blockade via conditional
//! pulses).

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

pub fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = CMat::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let v = a[[i, j]];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = v * b[[k, l]];
                }
            }
        }
    }
    out
}

pub fn eye(n: usize) -> CMat {
    CMat::from_diag_elem(n, c(1.0))
}

/// Embed `op` at tensor slot `pos` of a chain with the given local
/// dimensions, by explicit Kronecker products.
pub fn kron_embed(dims: &[usize], pos: usize, op: &CMat) -> CMat {
    assert_eq!(op.nrows(), dims[pos]);
    let mut out = eye(1);
    for (i, d) in dims.iter().enumerate() {
        let factor = if i == pos { op.clone() } else { eye(*d) };
        out = kron(&out, &factor);
    }
    out
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Overlap modulus |⟨a|b⟩| / (‖a‖‖b‖).
pub fn overlap_mod(a: &CVec, b: &CVec) -> f64 {
    let dot: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    dot.norm() / (na * nb)
}

/// Textbook Grover success probability sin²((2m+1)·arcsin 2^{−k/2}).
pub fn grover_success(k: usize, m: usize) -> f64 {
    let theta = (1.0 / (2.0f64.powi(k as i32)).sqrt()).asin();
    ((2.0 * m as f64 + 1.0) * theta).sin().powi(2)
}

/// Ideal-limit evaluator: exact unitary products on the 4^k (×2) space with
/// detuned atoms hard-excluded from the microwave and V→∞ blockade realized
/// by conditional pulses.
pub struct Ideal {
    pub k: usize,
    pub ancilla: bool,
}

impl Ideal {
    pub fn dim(&self) -> usize {
        4usize.pow(self.k as u32) * if self.ancilla { 2 } else { 1 }
    }

    fn anc_dim(&self) -> usize {
        if self.ancilla {
            2
        } else {
            1
        }
    }

    pub fn level_of(&self, idx: usize, atom: usize) -> usize {
        (idx / (4usize.pow((self.k - 1 - atom) as u32) * self.anc_dim())) % 4
    }

    pub fn anc_of(&self, idx: usize) -> usize {
        idx % self.anc_dim()
    }

    pub fn initial_state(&self) -> CVec {
        let mut v = CVec::zeros(self.dim());
        v[0] = c(1.0);
        v
    }

    fn atom_stride(&self, atom: usize) -> usize {
        4usize.pow((self.k - 1 - atom) as u32) * self.anc_dim()
    }

    /// Apply a 2×2 gate on one atom's (a, b) level pair, restricted to basis
    /// states satisfying `allowed`.
    fn apply_two_level(
        &self,
        state: &mut CVec,
        atom_stride: usize,
        level_of: impl Fn(usize) -> usize,
        a: usize,
        b: usize,
        u: &CMat,
        allowed: impl Fn(usize) -> bool,
    ) {
        let dim = state.len();
        for idx in 0..dim {
            if level_of(idx) != a {
                continue;
            }
            let jdx = idx + (b - a) * atom_stride;
            if !allowed(idx) {
                continue;
            }
            let va = state[idx];
            let vb = state[jdx];
            state[idx] = u[[0, 0]] * va + u[[0, 1]] * vb;
            state[jdx] = u[[1, 0]] * va + u[[1, 1]] * vb;
        }
    }

    /// U_φ(θ) as a 2×2 matrix.
    pub fn gate(phase: f64, area: f64) -> CMat {
        let mut u = CMat::zeros((2, 2));
        let ch = c((area / 2.0).cos());
        let sh = (area / 2.0).sin();
        u[[0, 0]] = ch;
        u[[1, 1]] = ch;
        u[[0, 1]] = C64::new(0.0, sh) * C64::from_polar(1.0, -phase);
        u[[1, 0]] = C64::new(0.0, sh) * C64::from_polar(1.0, phase);
        u
    }

    /// Global microwave gate on the qubit pair of every atom in `mask`.
    pub fn masked_mw(&self, state: &mut CVec, u: &CMat, mask: &[bool]) {
        for atom in 0..self.k {
            if !mask[atom] {
                continue;
            }
            let stride = self.atom_stride(atom);
            self.apply_two_level(
                state,
                stride,
                |idx| self.level_of(idx, atom),
                0,
                1,
                u,
                |_| true,
            );
        }
    }

    /// Laser π pulse on one atom's (1, r) pair, blocked when any other
    /// register atom is in r (direct scheme) or the ancilla is in R
    /// (ancilla scheme).
    pub fn laser_pulse(&self, state: &mut CVec, atom: usize, phase: f64, direct: bool) {
        let u = Self::gate(phase, std::f64::consts::PI);
        let stride = self.atom_stride(atom);
        self.apply_two_level(
            state,
            stride,
            |idx| self.level_of(idx, atom),
            1,
            2,
            &u,
            |idx| {
                if direct {
                    (0..self.k).all(|j| j == atom || self.level_of(idx, j) != 2)
                } else {
                    self.anc_of(idx) != 1
                }
            },
        );
    }

    /// Ancilla 2π pulse: multiplies non-blocked components by −1.
    pub fn ancilla_two_pi(&self, state: &mut CVec) {
        assert!(self.ancilla);
        for idx in 0..self.dim() {
            let blocked = (0..self.k).any(|j| self.level_of(idx, j) == 2);
            if !blocked {
                state[idx] = -state[idx];
            }
        }
    }

    pub fn rydberg_block(&self, state: &mut CVec, direct: bool) {
        if direct {
            for j in 0..self.k {
                self.laser_pulse(state, j, 0.0, true);
            }
            for j in (0..self.k).rev() {
                self.laser_pulse(state, j, 0.0, true);
            }
        } else {
            for j in 0..self.k {
                self.laser_pulse(state, j, 0.0, false);
            }
            self.ancilla_two_pi(state);
            for j in 0..self.k {
                self.laser_pulse(state, j, std::f64::consts::PI, false);
            }
        }
    }

    pub fn oracle(&self, state: &mut CVec, marked: &[u8], direct: bool) {
        let u = Self::gate(0.0, std::f64::consts::PI);
        let mask: Vec<bool> = marked.iter().map(|b| *b == 1).collect();
        self.masked_mw(state, &u, &mask);
        self.rydberg_block(state, direct);
        self.masked_mw(state, &u, &mask);
    }

    pub fn grover(&self, state: &mut CVec, direct: bool) {
        let pi = std::f64::consts::PI;
        let all = vec![true; self.k];
        self.masked_mw(state, &Self::gate(pi / 2.0, pi / 2.0), &all);
        self.rydberg_block(state, direct);
        self.masked_mw(state, &Self::gate(-pi / 2.0, pi / 2.0), &all);
    }

    pub fn prepare(&self, state: &mut CVec) {
        let pi = std::f64::consts::PI;
        let all = vec![true; self.k];
        self.masked_mw(state, &Self::gate(-pi / 2.0, pi / 2.0), &all);
    }

    /// Full run, returning the state after each iteration.
    pub fn run(&self, marked: &[u8], direct: bool, iterations: usize) -> Vec<CVec> {
        assert_eq!(marked.len(), self.k);
        let mut state = self.initial_state();
        self.prepare(&mut state);
        let mut out = Vec::with_capacity(iterations);
        for _ in 0..iterations {
            self.oracle(&mut state, marked, direct);
            self.grover(&mut state, direct);
            out.push(state.clone());
        }
        out
    }

    /// Probability that every atom matches the marked digit (level 1 or 3
    /// counting as "not |0⟩"), ancilla traced over.
    pub fn success(&self, state: &CVec, marked: &[u8]) -> f64 {
        let mut p = 0.0;
        for (idx, amp) in state.iter().enumerate() {
            let ok = (0..self.k).all(|j| {
                let l = self.level_of(idx, j);
                match marked[j] {
                    0 => l == 0,
                    _ => l == 1 || l == 3,
                }
            });
            if ok {
                p += amp.norm_sqr();
            }
        }
        p
    }
}
