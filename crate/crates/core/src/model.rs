//! Hamiltonian and dissipator assembly for one pulse segment.
//!
//! All frequencies and rates are stored in rad/s (ħ = 1). Configuration
//! ingestion converts "2π × MHz"-style inputs once, so nothing here carries
//! unit ambiguity.

use crate::error::{Error, Result};
use crate::hilbert::{embed_single, ketbra, RegisterConfig, Scheme, Site, ANC_LEVELS, REG_LEVELS};
use crate::linalg::{c, identity, CMat};
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Piecewise-constant drive settings for one segment.
///
/// The microwave amplitude and phase are global; only the detunings are
/// per-atom. Laser amplitude/phase are per register atom, plus one pair for
/// the ancilla.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveSettings {
    pub mw_amp: f64,
    pub mw_phase: f64,
    pub mw_detuning: Vec<f64>,
    pub laser_amp: Vec<f64>,
    pub laser_phase: Vec<f64>,
    pub ancilla_laser_amp: f64,
    pub ancilla_laser_phase: f64,
}

impl DriveSettings {
    /// All drives off.
    pub fn off(k: usize) -> Self {
        DriveSettings {
            mw_amp: 0.0,
            mw_phase: 0.0,
            mw_detuning: vec![0.0; k],
            laser_amp: vec![0.0; k],
            laser_phase: vec![0.0; k],
            ancilla_laser_amp: 0.0,
            ancilla_laser_phase: 0.0,
        }
    }

    pub fn validate(&self, cfg: &RegisterConfig) -> Result<()> {
        let k = cfg.k();
        if self.mw_detuning.len() != k || self.laser_amp.len() != k || self.laser_phase.len() != k
        {
            return Err(Error::Config(format!(
                "drive vectors must have length k = {k}"
            )));
        }
        let amp_ok = self.mw_amp >= 0.0
            && self.laser_amp.iter().all(|a| *a >= 0.0)
            && self.ancilla_laser_amp >= 0.0;
        if !amp_ok {
            return Err(Error::Config("drive amplitudes must be >= 0".into()));
        }
        let phase_ok = |p: f64| p > -std::f64::consts::PI - 1e-12 && p <= std::f64::consts::PI + 1e-12;
        if !phase_ok(self.mw_phase)
            || !self.laser_phase.iter().all(|p| phase_ok(*p))
            || !phase_ok(self.ancilla_laser_phase)
        {
            return Err(Error::Config("phases must lie in (-pi, pi]".into()));
        }
        if self.ancilla_laser_amp > 0.0 && !cfg.has_ancilla() {
            return Err(Error::AncillaDriveWithoutAncilla);
        }
        Ok(())
    }

    pub fn is_off(&self) -> bool {
        self.mw_amp == 0.0
            && self.laser_amp.iter().all(|a| *a == 0.0)
            && self.ancilla_laser_amp == 0.0
    }

    /// Exact bit-pattern key for propagator caching.
    pub fn cache_key(&self) -> Vec<u64> {
        let mut key = vec![self.mw_amp.to_bits(), self.mw_phase.to_bits()];
        key.extend(self.mw_detuning.iter().map(|x| x.to_bits()));
        key.extend(self.laser_amp.iter().map(|x| x.to_bits()));
        key.extend(self.laser_phase.iter().map(|x| x.to_bits()));
        key.push(self.ancilla_laser_amp.to_bits());
        key.push(self.ancilla_laser_phase.to_bits());
        key
    }
}

/// The seven per-atom dissipation rates, all in s⁻¹.
///
/// Γ_r = Γ_r0 + Γ_r1 + Γ_ro is always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationRates {
    pub gamma_0: f64,
    pub gamma_1: f64,
    pub gamma_r0: f64,
    pub gamma_r1: f64,
    pub gamma_ro: f64,
    pub deph_z: f64,
    pub deph_r: f64,
}

impl RelaxationRates {
    pub fn zero() -> Self {
        RelaxationRates {
            gamma_0: 0.0,
            gamma_1: 0.0,
            gamma_r0: 0.0,
            gamma_r1: 0.0,
            gamma_ro: 0.0,
            deph_z: 0.0,
            deph_r: 0.0,
        }
    }

    /// Total Rydberg decay rate Γ_r.
    pub fn gamma_r(&self) -> f64 {
        self.gamma_r0 + self.gamma_r1 + self.gamma_ro
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gamma_0,
            self.gamma_1,
            self.gamma_r0,
            self.gamma_r1,
            self.gamma_ro,
            self.deph_z,
            self.deph_r,
        ];
        if all.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Config("relaxation rates must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.gamma_0 == 0.0
            && self.gamma_1 == 0.0
            && self.gamma_r() == 0.0
            && self.deph_z == 0.0
            && self.deph_r == 0.0
    }
}

/// Pairwise blockade shifts, as given by the user.
#[derive(Debug, Clone, PartialEq)]
pub enum InteractionSpec {
    /// V = factor · w, with w the Rydberg excitation linewidth computed from
    /// the active laser amplitude and rates. Default factor 50.
    ScaledLinewidth { factor: f64 },
    /// One shift applied to every relevant pair, in rad/s.
    Uniform { v: f64 },
    /// Explicit symmetric register-pair matrix (direct scheme only).
    RegisterPairs { v: Vec<Vec<f64>> },
    /// Explicit register–ancilla shifts, one per register atom (ancilla scheme only).
    AncillaPairs { v: Vec<f64> },
    /// Positions plus a C_p/r^p power law (p = 3 or 6).
    Positions {
        register_m: Vec<[f64; 3]>,
        ancilla_m: Option<[f64; 3]>,
        c_p: f64,
        p: i32,
    },
}

impl Default for InteractionSpec {
    fn default() -> Self {
        InteractionSpec::ScaledLinewidth { factor: 50.0 }
    }
}

/// Interaction spec resolved against a scheme: a symmetric register-pair
/// matrix for the direct scheme, or per-atom register–ancilla shifts.
#[derive(Debug, Clone)]
pub struct ResolvedInteraction {
    pub register_pairs: Array2<f64>,
    pub ancilla_pairs: Vec<f64>,
}

impl ResolvedInteraction {
    pub fn max_shift(&self) -> f64 {
        let a = self.register_pairs.iter().copied().fold(0.0f64, f64::max);
        let b = self.ancilla_pairs.iter().copied().fold(0.0f64, f64::max);
        a.max(b)
    }
}

/// Rydberg excitation linewidth w = |Ω_l| √(γ_r1 / Γ_r) with
/// γ_r1 = (Γ_1 + Γ_r)/2 + γ_r.
#[derive(Debug, Clone, Copy)]
pub struct Linewidth {
    pub w: f64,
    /// True when the strong-drive assumption |Ω_l|² ≫ Γ_r γ_r1 holds
    /// (checked as strict inequality |Ω_l|² > Γ_r γ_r1).
    pub strong_drive: bool,
}

pub fn blockade_linewidth(laser_amp: f64, rates: &RelaxationRates) -> Result<Linewidth> {
    let gamma_r = rates.gamma_r();
    if gamma_r <= 0.0 {
        return Err(Error::LinewidthUndefined);
    }
    let gamma_r1 = 0.5 * (rates.gamma_1 + gamma_r) + rates.deph_r;
    Ok(Linewidth {
        w: laser_amp * (gamma_r1 / gamma_r).sqrt(),
        strong_drive: laser_amp * laser_amp > gamma_r * gamma_r1,
    })
}

/// Linewidth used for sizing default blockade shifts. Falls back to the
/// zero-rate limit |Ω_l|/√2 (γ_r1/Γ_r → 1/2) when all Rydberg-transition
/// rates vanish.
pub fn sizing_linewidth(laser_amp: f64, rates: &RelaxationRates) -> Result<f64> {
    if rates.gamma_r() > 0.0 {
        Ok(blockade_linewidth(laser_amp, rates)?.w)
    } else if rates.gamma_1 == 0.0 && rates.deph_r == 0.0 {
        Ok(laser_amp / 2.0f64.sqrt())
    } else {
        Err(Error::LinewidthUndefined)
    }
}

/// Blockade criterion V_aa >= 10 w.
pub fn blockade_ok(v: f64, w: f64) -> bool {
    v >= 10.0 * w
}

pub fn resolve_interaction(
    spec: &InteractionSpec,
    cfg: &RegisterConfig,
    laser_amp: f64,
    rates: &[RelaxationRates],
) -> Result<ResolvedInteraction> {
    let k = cfg.k();
    let uniform = |v: f64| -> ResolvedInteraction {
        match cfg.scheme() {
            Scheme::DirectBlockade => {
                let mut m = Array2::zeros((k, k));
                for i in 0..k {
                    for j in 0..k {
                        if i != j {
                            m[[i, j]] = v;
                        }
                    }
                }
                ResolvedInteraction {
                    register_pairs: m,
                    ancilla_pairs: Vec::new(),
                }
            }
            Scheme::AncillaBlockade => ResolvedInteraction {
                register_pairs: Array2::zeros((k, k)),
                ancilla_pairs: vec![v; k],
            },
        }
    };

    let resolved = match spec {
        InteractionSpec::ScaledLinewidth { factor } => {
            if *factor <= 0.0 {
                return Err(Error::Config("interaction scale factor must be > 0".into()));
            }
            let w = rates
                .iter()
                .map(|r| sizing_linewidth(laser_amp, r))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0f64, f64::max);
            uniform(factor * w)
        }
        InteractionSpec::Uniform { v } => {
            if *v < 0.0 {
                return Err(Error::Config("interaction shift must be >= 0".into()));
            }
            uniform(*v)
        }
        InteractionSpec::RegisterPairs { v } => {
            if cfg.scheme() != Scheme::DirectBlockade {
                return Err(Error::SchemeMismatch(
                    "register-pair shifts given but scheme has an ancilla".into(),
                ));
            }
            if v.len() != k || v.iter().any(|row| row.len() != k) {
                return Err(Error::Config("register-pair matrix must be k x k".into()));
            }
            let mut m = Array2::zeros((k, k));
            for i in 0..k {
                for j in 0..k {
                    if i == j {
                        continue;
                    }
                    if v[i][j] < 0.0 {
                        return Err(Error::Config("pair shifts must be >= 0".into()));
                    }
                    if (v[i][j] - v[j][i]).abs() > 1e-9 * v[i][j].abs().max(1.0) {
                        return Err(Error::Config("pair-shift matrix must be symmetric".into()));
                    }
                    m[[i, j]] = v[i][j];
                }
            }
            ResolvedInteraction {
                register_pairs: m,
                ancilla_pairs: Vec::new(),
            }
        }
        InteractionSpec::AncillaPairs { v } => {
            if cfg.scheme() != Scheme::AncillaBlockade {
                return Err(Error::SchemeMismatch(
                    "register-ancilla shifts given but scheme has no ancilla".into(),
                ));
            }
            if v.len() != k {
                return Err(Error::Config("need one register-ancilla shift per atom".into()));
            }
            if v.iter().any(|x| *x < 0.0) {
                return Err(Error::Config("pair shifts must be >= 0".into()));
            }
            ResolvedInteraction {
                register_pairs: Array2::zeros((k, k)),
                ancilla_pairs: v.clone(),
            }
        }
        InteractionSpec::Positions {
            register_m,
            ancilla_m,
            c_p,
            p,
        } => {
            if register_m.len() != k {
                return Err(Error::Config("need one position per register atom".into()));
            }
            if ![3, 6].contains(p) {
                return Err(Error::Config("interaction exponent p must be 3 or 6".into()));
            }
            let shift = |a: &[f64; 3], b: &[f64; 3]| -> Result<f64> {
                let r2: f64 = (0..3).map(|i| (a[i] - b[i]).powi(2)).sum();
                if r2 == 0.0 {
                    return Err(Error::Config("atom positions must be pairwise distinct".into()));
                }
                Ok(c_p / r2.sqrt().powi(*p))
            };
            match cfg.scheme() {
                Scheme::DirectBlockade => {
                    let mut m = Array2::zeros((k, k));
                    for i in 0..k {
                        for j in 0..k {
                            if i != j {
                                m[[i, j]] = shift(&register_m[i], &register_m[j])?;
                            }
                        }
                    }
                    ResolvedInteraction {
                        register_pairs: m,
                        ancilla_pairs: Vec::new(),
                    }
                }
                Scheme::AncillaBlockade => {
                    let anc = ancilla_m.ok_or_else(|| {
                        Error::Config("ancilla position required for ancilla scheme".into())
                    })?;
                    let mut v = Vec::with_capacity(k);
                    for pos in register_m {
                        v.push(shift(pos, &anc)?);
                    }
                    ResolvedInteraction {
                        register_pairs: Array2::zeros((k, k)),
                        ancilla_pairs: v,
                    }
                }
            }
        }
    };
    Ok(resolved)
}

/// Microwave Hamiltonian, Σ_j −[Δ_j σ₁₁ + ½Ω σ₁₀ + ½Ω* σ₀₁] with
/// Ω = |Ω| e^{iφ}.
pub fn microwave_hamiltonian(drive: &DriveSettings, cfg: &RegisterConfig) -> Result<CMat> {
    drive.validate(cfg)?;
    let omega = C64::from_polar(drive.mw_amp, drive.mw_phase);
    let mut h = CMat::zeros((cfg.dim(), cfg.dim()));
    for j in 0..cfg.k() {
        let mut local = CMat::zeros((REG_LEVELS, REG_LEVELS));
        local[[1, 1]] = c(-drive.mw_detuning[j]);
        local[[1, 0]] = -omega * c(0.5);
        local[[0, 1]] = -omega.conj() * c(0.5);
        h += &embed_single(cfg, &local, Site::Register(j))?;
    }
    Ok(h)
}

/// Laser Hamiltonian on |1⟩↔|r⟩ per register atom, plus |g⟩↔|R⟩ on the
/// ancilla when present: Σ_j −½[Ω_l σ_r1 + Ω_l* σ_1r].
pub fn laser_hamiltonian(drive: &DriveSettings, cfg: &RegisterConfig) -> Result<CMat> {
    drive.validate(cfg)?;
    let mut h = CMat::zeros((cfg.dim(), cfg.dim()));
    for j in 0..cfg.k() {
        if drive.laser_amp[j] == 0.0 {
            continue;
        }
        let omega = C64::from_polar(drive.laser_amp[j], drive.laser_phase[j]);
        let mut local = CMat::zeros((REG_LEVELS, REG_LEVELS));
        local[[2, 1]] = -omega * c(0.5);
        local[[1, 2]] = -omega.conj() * c(0.5);
        h += &embed_single(cfg, &local, Site::Register(j))?;
    }
    if drive.ancilla_laser_amp > 0.0 {
        let omega = C64::from_polar(drive.ancilla_laser_amp, drive.ancilla_laser_phase);
        let mut local = CMat::zeros((ANC_LEVELS, ANC_LEVELS));
        local[[1, 0]] = -omega * c(0.5);
        local[[0, 1]] = -omega.conj() * c(0.5);
        h += &embed_single(cfg, &local, Site::Ancilla)?;
    }
    Ok(h)
}

/// Diagonal interaction Hamiltonian: Σ_{i<j} V_ij σ_rr⊗σ_rr for the direct
/// scheme, Σ_j V_ja σ_rr⊗σ_RR for the ancilla scheme.
pub fn interaction_hamiltonian(inter: &ResolvedInteraction, cfg: &RegisterConfig) -> CMat {
    let dim = cfg.dim();
    let k = cfg.k();
    let mut h = CMat::zeros((dim, dim));
    for idx in 0..dim {
        let mut shift = 0.0;
        match cfg.scheme() {
            Scheme::DirectBlockade => {
                for i in 0..k {
                    if cfg.level_of(idx, i) != crate::hilbert::Level::Ryd {
                        continue;
                    }
                    for j in (i + 1)..k {
                        if cfg.level_of(idx, j) == crate::hilbert::Level::Ryd {
                            shift += inter.register_pairs[[i, j]];
                        }
                    }
                }
            }
            Scheme::AncillaBlockade => {
                if cfg.ancilla_level_of(idx) == Some(crate::hilbert::AncillaLevel::R) {
                    for j in 0..k {
                        if cfg.level_of(idx, j) == crate::hilbert::Level::Ryd {
                            shift += inter.ancilla_pairs[j];
                        }
                    }
                }
            }
        }
        h[[idx, idx]] = c(shift);
    }
    h
}

/// Dissipation channel identity, for jump logs and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JumpChannel {
    pub site: Site,
    pub kind: ChannelKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    /// √Γ₀ σ₁₀ — pumping |0⟩→|1⟩.
    PumpToQ1,
    /// √Γ₁ σ₀₁ — decay |1⟩→|0⟩.
    DecayToQ0,
    /// √Γ_r0 σ₀r — Rydberg decay to |0⟩.
    RydDecayQ0,
    /// √Γ_r1 σ₁r — Rydberg decay to |1⟩.
    RydDecayQ1,
    /// √Γ_ro σ_or — Rydberg loss to |o⟩.
    RydLoss,
    /// √(γ_z/2) (2σ₁₁ − 1) — qubit-transition dephasing.
    QubitDephasing,
    /// √(γ_r/2) (2σ_rr − 1) — optical-transition dephasing.
    RydDephasing,
    /// Ancilla decay |R⟩→|g⟩ (experimental; off by default).
    AncillaDecay,
    /// Ancilla dephasing on |g⟩↔|R⟩ (experimental; off by default).
    AncillaDephasing,
}

impl std::fmt::Display for JumpChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            ChannelKind::PumpToQ1 => "gamma0",
            ChannelKind::DecayToQ0 => "gamma1",
            ChannelKind::RydDecayQ0 => "gamma_r0",
            ChannelKind::RydDecayQ1 => "gamma_r1",
            ChannelKind::RydLoss => "gamma_ro",
            ChannelKind::QubitDephasing => "deph_z",
            ChannelKind::RydDephasing => "deph_r",
            ChannelKind::AncillaDecay => "anc_decay",
            ChannelKind::AncillaDephasing => "anc_deph",
        };
        match self.site {
            Site::Register(j) => write!(f, "{kind}[atom {j}]"),
            Site::Ancilla => write!(f, "{kind}[ancilla]"),
        }
    }
}

/// One Lindblad jump operator, embedded in the full space.
#[derive(Debug, Clone)]
pub struct JumpOperator {
    pub matrix: CMat,
    pub channel: JumpChannel,
}

/// Build the jump-operator list: seven channels per register atom (zero-rate
/// channels omitted), plus optional ancilla channels.
pub fn jump_operators(
    rates: &[RelaxationRates],
    ancilla_rates: Option<&RelaxationRates>,
    cfg: &RegisterConfig,
) -> Result<Vec<JumpOperator>> {
    if rates.len() != cfg.k() {
        return Err(Error::Config(format!(
            "need one RelaxationRates per register atom (k = {})",
            cfg.k()
        )));
    }
    let mut out = Vec::new();
    for (j, r) in rates.iter().enumerate() {
        r.validate()?;
        let site = Site::Register(j);
        let mut push = |rate: f64, local: CMat, kind: ChannelKind| -> Result<()> {
            if rate > 0.0 {
                out.push(JumpOperator {
                    matrix: embed_single(cfg, &(&local * c(rate.sqrt())), site)?,
                    channel: JumpChannel { site, kind },
                });
            }
            Ok(())
        };
        push(r.gamma_0, ketbra(REG_LEVELS, 1, 0), ChannelKind::PumpToQ1)?;
        push(r.gamma_1, ketbra(REG_LEVELS, 0, 1), ChannelKind::DecayToQ0)?;
        push(r.gamma_r0, ketbra(REG_LEVELS, 0, 2), ChannelKind::RydDecayQ0)?;
        push(r.gamma_r1, ketbra(REG_LEVELS, 1, 2), ChannelKind::RydDecayQ1)?;
        push(r.gamma_ro, ketbra(REG_LEVELS, 3, 2), ChannelKind::RydLoss)?;
        // Dephasing operators carry √(γ/2)(2σ_μμ − 1).
        let two_sigma_minus_one = |level: usize| -> CMat {
            &ketbra(REG_LEVELS, level, level) * c(2.0) - &identity(REG_LEVELS)
        };
        push(r.deph_z / 2.0, two_sigma_minus_one(1), ChannelKind::QubitDephasing)?;
        push(r.deph_r / 2.0, two_sigma_minus_one(2), ChannelKind::RydDephasing)?;
    }
    if let Some(ar) = ancilla_rates {
        if !cfg.has_ancilla() {
            return Err(Error::SchemeMismatch(
                "ancilla rates given but scheme has no ancilla".into(),
            ));
        }
        ar.validate()?;
        let site = Site::Ancilla;
        let decay = ar.gamma_r();
        if decay > 0.0 {
            out.push(JumpOperator {
                matrix: embed_single(cfg, &(&ketbra(ANC_LEVELS, 0, 1) * c(decay.sqrt())), site)?,
                channel: JumpChannel {
                    site,
                    kind: ChannelKind::AncillaDecay,
                },
            });
        }
        if ar.deph_r > 0.0 {
            let local = &ketbra(ANC_LEVELS, 1, 1) * c(2.0) - &identity(ANC_LEVELS);
            out.push(JumpOperator {
                matrix: embed_single(cfg, &(&local * c((ar.deph_r / 2.0).sqrt())), site)?,
                channel: JumpChannel {
                    site,
                    kind: ChannelKind::AncillaDephasing,
                },
            });
        }
    }
    Ok(out)
}

/// Σ_m L_m† L_m.
pub fn sum_ldag_l(jumps: &[JumpOperator]) -> Option<CMat> {
    let mut acc: Option<CMat> = None;
    for j in jumps {
        let term = crate::linalg::dagger(&j.matrix).dot(&j.matrix);
        match &mut acc {
            Some(a) => *a += &term,
            None => acc = Some(term),
        }
    }
    acc
}

/// Effective non-Hermitian Hamiltonian H − (i/2) Σ L†L.
pub fn effective_hamiltonian(h: &CMat, jumps: &[JumpOperator]) -> CMat {
    match sum_ldag_l(jumps) {
        Some(s) => h - &(&s * C64::new(0.0, 0.5)),
        None => h.clone(),
    }
}

/// Full model for one experiment: register layout, rates, resolved
/// interaction, and the precomputed jump list.
#[derive(Debug, Clone)]
pub struct ModelContext {
    cfg: RegisterConfig,
    rates: Vec<RelaxationRates>,
    interaction: ResolvedInteraction,
    jumps: Vec<JumpOperator>,
    h_int: CMat,
}

impl ModelContext {
    pub fn new(
        cfg: RegisterConfig,
        rates: Vec<RelaxationRates>,
        ancilla_rates: Option<RelaxationRates>,
        spec: &InteractionSpec,
        sizing_laser_amp: f64,
    ) -> Result<Self> {
        let interaction = resolve_interaction(spec, &cfg, sizing_laser_amp, &rates)?;
        let jumps = jump_operators(&rates, ancilla_rates.as_ref(), &cfg)?;
        let h_int = interaction_hamiltonian(&interaction, &cfg);
        Ok(ModelContext {
            cfg,
            rates,
            interaction,
            jumps,
            h_int,
        })
    }

    /// Uniform rates on every register atom.
    pub fn with_uniform_rates(
        cfg: RegisterConfig,
        rates: RelaxationRates,
        spec: &InteractionSpec,
        sizing_laser_amp: f64,
    ) -> Result<Self> {
        let k = cfg.k();
        Self::new(cfg, vec![rates; k], None, spec, sizing_laser_amp)
    }

    pub fn cfg(&self) -> &RegisterConfig {
        &self.cfg
    }

    pub fn rates(&self) -> &[RelaxationRates] {
        &self.rates
    }

    pub fn interaction(&self) -> &ResolvedInteraction {
        &self.interaction
    }

    pub fn jumps(&self) -> &[JumpOperator] {
        &self.jumps
    }

    /// Total Hamiltonian (microwave + laser + interaction) for one segment.
    pub fn hamiltonian(&self, drive: &DriveSettings) -> Result<CMat> {
        let mut h = microwave_hamiltonian(drive, &self.cfg)?;
        h += &laser_hamiltonian(drive, &self.cfg)?;
        h += &self.h_int;
        Ok(h)
    }

    /// Drive Hamiltonian with the blockade interaction left out. The
    /// interaction is diagonal and commutes with the microwave terms, so
    /// laser-off evolution factorizes into this part times interaction
    /// phases (see [`ModelContext::interaction_diagonal`]).
    pub fn hamiltonian_no_interaction(&self, drive: &DriveSettings) -> Result<CMat> {
        let mut h = microwave_hamiltonian(drive, &self.cfg)?;
        h += &laser_hamiltonian(drive, &self.cfg)?;
        Ok(h)
    }

    /// Diagonal of the interaction Hamiltonian, rad/s per basis state.
    pub fn interaction_diagonal(&self) -> Vec<f64> {
        self.h_int.diag().iter().map(|z| z.re).collect()
    }

    pub fn effective_hamiltonian(&self, drive: &DriveSettings) -> Result<CMat> {
        Ok(effective_hamiltonian(&self.hamiltonian(drive)?, &self.jumps))
    }
}
