//! Tensor-product basis for k four-level register atoms plus an optional
//! two-level ancilla.
//!
//! Basis convention: atom 0 is the most significant factor, so a register
//! configuration (μ₀, μ₁, …) maps to index μ₀·4^(k−1) + μ₁·4^(k−2) + ⋯.
//! When an ancilla is present its level is appended as the least significant
//! factor (index × 2 + a).

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Register atoms carry four levels.
pub const REG_LEVELS: usize = 4;
/// The ancilla carries two.
pub const ANC_LEVELS: usize = 2;

/// Level of a register atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    /// Qubit state |0⟩.
    Q0 = 0,
    /// Qubit state |1⟩.
    Q1 = 1,
    /// Rydberg state |r⟩.
    Ryd = 2,
    /// Lost-atom state |o⟩ (collects Rydberg decay out of the computational manifold).
    Lost = 3,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Q0, Level::Q1, Level::Ryd, Level::Lost];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Level> {
        Level::ALL.get(i).copied().ok_or(Error::LevelOutOfRange {
            level: i,
            kind: "register atom",
        })
    }

    pub fn tag(self) -> &'static str {
        match self {
            Level::Q0 => "q0",
            Level::Q1 => "q1",
            Level::Ryd => "r",
            Level::Lost => "o",
        }
    }
}

/// Level of the ancilla atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AncillaLevel {
    /// Ground state |g⟩.
    G = 0,
    /// Rydberg state |R⟩.
    R = 1,
}

impl AncillaLevel {
    pub const ALL: [AncillaLevel; 2] = [AncillaLevel::G, AncillaLevel::R];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<AncillaLevel> {
        AncillaLevel::ALL
            .get(i)
            .copied()
            .ok_or(Error::LevelOutOfRange {
                level: i,
                kind: "ancilla",
            })
    }

    pub fn tag(self) -> &'static str {
        match self {
            AncillaLevel::G => "g",
            AncillaLevel::R => "R",
        }
    }
}

/// Interaction configuration: blockade between register pairs, or mediated by
/// a single ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Every pair of register atoms in |r⟩ interacts (sequential pulses).
    #[serde(rename = "direct")]
    DirectBlockade,
    /// Register atoms interact only with the ancilla's |R⟩ (simultaneous
    /// pulses plus an ancilla 2π pulse).
    #[serde(rename = "ancilla")]
    AncillaBlockade,
}

/// A tensor factor: one of the register atoms, or the ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    Register(usize),
    Ancilla,
}

/// Register layout and marked element for one experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterConfig {
    k: usize,
    scheme: Scheme,
    marked: Vec<u8>,
}

impl RegisterConfig {
    pub fn new(k: usize, scheme: Scheme, marked: &str) -> Result<Self> {
        if !(1..=4).contains(&k) {
            return Err(Error::UnsupportedRegisterSize(k));
        }
        if marked.len() != k {
            return Err(Error::InvalidMarked {
                marked: marked.to_string(),
                k,
                reason: format!("length {} != k", marked.len()),
            });
        }
        let mut bits = Vec::with_capacity(k);
        for ch in marked.chars() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                other => {
                    return Err(Error::InvalidMarked {
                        marked: marked.to_string(),
                        k,
                        reason: format!("digit {other:?} not in {{0,1}}"),
                    })
                }
            }
        }
        Ok(RegisterConfig {
            k,
            scheme,
            marked: bits,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Marked element digits b₀ b₁ ⋯ b_{k−1}.
    pub fn marked(&self) -> &[u8] {
        &self.marked
    }

    pub fn marked_str(&self) -> String {
        self.marked.iter().map(|b| char::from(b'0' + b)).collect()
    }

    pub fn has_ancilla(&self) -> bool {
        self.scheme == Scheme::AncillaBlockade
    }

    /// Total Hilbert-space dimension: 4^k, doubled when the ancilla is present.
    pub fn dim(&self) -> usize {
        let base = REG_LEVELS.pow(self.k as u32);
        if self.has_ancilla() {
            base * ANC_LEVELS
        } else {
            base
        }
    }

    /// Index stride of one site in the basis ordering.
    pub fn stride(&self, site: Site) -> Result<usize> {
        let anc = if self.has_ancilla() { ANC_LEVELS } else { 1 };
        match site {
            Site::Register(j) => {
                if j >= self.k {
                    return Err(Error::AtomOutOfRange { atom: j, k: self.k });
                }
                Ok(REG_LEVELS.pow((self.k - 1 - j) as u32) * anc)
            }
            Site::Ancilla => {
                if !self.has_ancilla() {
                    return Err(Error::SchemeMismatch(
                        "no ancilla in direct-blockade scheme".into(),
                    ));
                }
                Ok(1)
            }
        }
    }

    pub fn site_dim(&self, site: Site) -> usize {
        match site {
            Site::Register(_) => REG_LEVELS,
            Site::Ancilla => ANC_LEVELS,
        }
    }

    /// Level of register atom `atom` in basis state `index`.
    pub fn level_of(&self, index: usize, atom: usize) -> Level {
        let anc = if self.has_ancilla() { ANC_LEVELS } else { 1 };
        let stride = REG_LEVELS.pow((self.k - 1 - atom) as u32) * anc;
        Level::ALL[(index / stride) % REG_LEVELS]
    }

    /// Ancilla level in basis state `index`, if the scheme has one.
    pub fn ancilla_level_of(&self, index: usize) -> Option<AncillaLevel> {
        if self.has_ancilla() {
            Some(AncillaLevel::ALL[index % ANC_LEVELS])
        } else {
            None
        }
    }
}

/// Basis index of a product state, per the documented ordering.
pub fn basis_index(
    cfg: &RegisterConfig,
    levels: &[Level],
    ancilla: Option<AncillaLevel>,
) -> Result<usize> {
    if levels.len() != cfg.k() {
        return Err(Error::Config(format!(
            "expected {} register levels, got {}",
            cfg.k(),
            levels.len()
        )));
    }
    if ancilla.is_some() != cfg.has_ancilla() {
        return Err(Error::SchemeMismatch(
            "ancilla level must be given exactly when the scheme has an ancilla".into(),
        ));
    }
    let mut idx = 0usize;
    for l in levels {
        idx = idx * REG_LEVELS + l.index();
    }
    if let Some(a) = ancilla {
        idx = idx * ANC_LEVELS + a.index();
    }
    Ok(idx)
}

/// Inverse of [`basis_index`].
pub fn basis_levels(cfg: &RegisterConfig, index: usize) -> (Vec<Level>, Option<AncillaLevel>) {
    let mut rest = index;
    let anc = if cfg.has_ancilla() {
        let a = AncillaLevel::ALL[rest % ANC_LEVELS];
        rest /= ANC_LEVELS;
        Some(a)
    } else {
        None
    };
    let mut levels = vec![Level::Q0; cfg.k()];
    for j in (0..cfg.k()).rev() {
        levels[j] = Level::ALL[rest % REG_LEVELS];
        rest /= REG_LEVELS;
    }
    (levels, anc)
}

/// All register atoms in |0⟩, ancilla (if any) in |g⟩.
pub fn initial_state(cfg: &RegisterConfig) -> CVec {
    let mut v = CVec::zeros(cfg.dim());
    v[0] = C64::new(1.0, 0.0);
    v
}

/// Embed a single-site operator into the full tensor-product space, acting as
/// the identity on every other factor.
pub fn embed_single(cfg: &RegisterConfig, op: &CMat, site: Site) -> Result<CMat> {
    let d = cfg.site_dim(site);
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::OperatorShape {
            got: (op.nrows(), op.ncols()),
            want: d,
        });
    }
    let stride = cfg.stride(site)?;
    let dim = cfg.dim();
    let block = stride * d;
    let mut m = CMat::zeros((dim, dim));
    for outer in 0..dim / block {
        for mu in 0..d {
            for nu in 0..d {
                let v = op[[mu, nu]];
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                for inner in 0..stride {
                    let row = outer * block + mu * stride + inner;
                    let col = outer * block + nu * stride + inner;
                    m[[row, col]] = v;
                }
            }
        }
    }
    Ok(m)
}

/// Single-site projector-style operator |a⟩⟨b| as a dense d×d matrix.
pub fn ketbra(d: usize, a: usize, b: usize) -> CMat {
    let mut m = CMat::zeros((d, d));
    m[[a, b]] = C64::new(1.0, 0.0);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dagger, identity, max_abs_diff};

    fn cfg(k: usize, scheme: Scheme) -> RegisterConfig {
        let marked: String = "01".chars().cycle().take(k).collect();
        RegisterConfig::new(k, scheme, &marked).unwrap()
    }

    #[test]
    fn dims_match_level_counts() {
        assert_eq!(cfg(2, Scheme::DirectBlockade).dim(), 16);
        assert_eq!(cfg(2, Scheme::AncillaBlockade).dim(), 32);
        assert_eq!(cfg(4, Scheme::DirectBlockade).dim(), 256);
        assert_eq!(cfg(4, Scheme::AncillaBlockade).dim(), 512);
    }

    #[test]
    fn initial_state_is_index_zero() {
        for scheme in [Scheme::DirectBlockade, Scheme::AncillaBlockade] {
            let c = cfg(2, scheme);
            let v = initial_state(&c);
            assert_eq!(v.len(), c.dim());
            assert_eq!(v[0], C64::new(1.0, 0.0));
            assert!(v.iter().skip(1).all(|z| z.norm_sqr() == 0.0));
        }
    }

    #[test]
    fn rejects_unsupported_k() {
        assert!(matches!(
            RegisterConfig::new(0, Scheme::DirectBlockade, ""),
            Err(Error::UnsupportedRegisterSize(0))
        ));
        assert!(matches!(
            RegisterConfig::new(5, Scheme::DirectBlockade, "01010"),
            Err(Error::UnsupportedRegisterSize(5))
        ));
    }

    #[test]
    fn rejects_bad_marked() {
        assert!(RegisterConfig::new(2, Scheme::DirectBlockade, "0").is_err());
        assert!(RegisterConfig::new(2, Scheme::DirectBlockade, "02").is_err());
    }

    #[test]
    fn basis_index_examples() {
        let c2 = cfg(2, Scheme::DirectBlockade);
        assert_eq!(basis_index(&c2, &[Level::Q1, Level::Q0], None).unwrap(), 4);
        assert_eq!(basis_index(&c2, &[Level::Q0, Level::Ryd], None).unwrap(), 2);
        let c3 = cfg(3, Scheme::DirectBlockade);
        assert_eq!(
            basis_index(&c3, &[Level::Lost, Level::Q0, Level::Q1], None).unwrap(),
            49
        );
    }

    #[test]
    fn basis_index_roundtrip_all() {
        for scheme in [Scheme::DirectBlockade, Scheme::AncillaBlockade] {
            for k in 1..=3 {
                let c = cfg(k, scheme);
                for idx in 0..c.dim() {
                    let (levels, anc) = basis_levels(&c, idx);
                    assert_eq!(basis_index(&c, &levels, anc).unwrap(), idx);
                    for (j, l) in levels.iter().enumerate() {
                        assert_eq!(c.level_of(idx, j), *l);
                    }
                    assert_eq!(c.ancilla_level_of(idx), anc);
                }
            }
        }
    }

    #[test]
    fn embed_identity_is_identity() {
        let c = cfg(2, Scheme::AncillaBlockade);
        for site in [Site::Register(0), Site::Register(1), Site::Ancilla] {
            let d = c.site_dim(site);
            let e = embed_single(&c, &identity(d), site).unwrap();
            assert!(max_abs_diff(&e, &identity(c.dim())) == 0.0);
        }
    }

    #[test]
    fn embed_sigma11_atom0_k2() {
        let c = cfg(2, Scheme::DirectBlockade);
        let e = embed_single(&c, &ketbra(4, 1, 1), Site::Register(0)).unwrap();
        for i in 0..16 {
            let want = if (4..8).contains(&i) { 1.0 } else { 0.0 };
            assert_eq!(e[[i, i]], C64::new(want, 0.0));
        }
        assert_eq!(e.iter().map(|z| z.norm_sqr()).sum::<f64>(), 4.0);
    }

    #[test]
    fn embeds_commute_and_preserve_hermiticity() {
        let c = cfg(3, Scheme::DirectBlockade);
        let herm = {
            let mut m = ketbra(4, 0, 2);
            m = &m + &dagger(&m);
            m[[1, 1]] = C64::new(-0.7, 0.0);
            m
        };
        let a = embed_single(&c, &herm, Site::Register(0)).unwrap();
        let b = embed_single(&c, &ketbra(4, 1, 0), Site::Register(2)).unwrap();
        assert!(max_abs_diff(&a.dot(&b), &b.dot(&a)) == 0.0);
        assert!(max_abs_diff(&a, &dagger(&a)) == 0.0);
    }

    #[test]
    fn embed_rejects_bad_shapes() {
        let c = cfg(2, Scheme::DirectBlockade);
        assert!(embed_single(&c, &identity(2), Site::Register(0)).is_err());
        assert!(embed_single(&c, &identity(4), Site::Register(2)).is_err());
        assert!(embed_single(&c, &identity(2), Site::Ancilla).is_err());
    }
}
