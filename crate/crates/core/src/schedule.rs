//! Compilation of the Grover pulse program into piecewise-constant segments.
//!
//! One algorithm run is: preparation, then `iterations` repetitions of the
//! oracle and Grover blocks, with a zero-duration measurement marker after
//! each iteration. Every pulse is followed by an idle gap of length δt during
//! which all drives are off but dissipation keeps running.

use crate::error::{Error, Result};
use crate::hilbert::{RegisterConfig, Scheme};
use crate::linalg::{CMat, c};
use crate::model::DriveSettings;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Which register atoms a laser pulse addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomSel {
    One(usize),
    All,
}

/// Semantic tag of a compiled segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentLabel {
    Prep,
    OracleXPre,
    OracleXPost,
    RydbergUp(AtomSel),
    RydbergDown(AtomSel),
    AncillaTwoPi,
    GroverMap,
    GroverUnmap,
    Idle,
    /// Zero-duration marker recording the state after iteration `n` (1-based).
    MeasureMarker(usize),
}

impl std::fmt::Display for SegmentLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SegmentLabel::Prep => write!(f, "prep"),
            SegmentLabel::OracleXPre => write!(f, "oracle_x_pre"),
            SegmentLabel::OracleXPost => write!(f, "oracle_x_post"),
            SegmentLabel::RydbergUp(AtomSel::One(j)) => write!(f, "rydberg_up({j})"),
            SegmentLabel::RydbergUp(AtomSel::All) => write!(f, "rydberg_up(all)"),
            SegmentLabel::RydbergDown(AtomSel::One(j)) => write!(f, "rydberg_down({j})"),
            SegmentLabel::RydbergDown(AtomSel::All) => write!(f, "rydberg_down(all)"),
            SegmentLabel::AncillaTwoPi => write!(f, "ancilla_2pi"),
            SegmentLabel::GroverMap => write!(f, "grover_map"),
            SegmentLabel::GroverUnmap => write!(f, "grover_unmap"),
            SegmentLabel::Idle => write!(f, "idle"),
            SegmentLabel::MeasureMarker(n) => write!(f, "measure_marker({n})"),
        }
    }
}

/// One piecewise-constant pulse segment.
#[derive(Debug, Clone)]
pub struct PulseSegment {
    pub duration: f64,
    pub drive: DriveSettings,
    pub label: SegmentLabel,
}

/// Drive parameters shared by every compiled pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams {
    /// Global microwave Rabi amplitude |Ω_mw|, rad/s.
    pub omega_mw: f64,
    /// Stark detuning Δ_mw applied to unmarked atoms during oracle X pulses, rad/s.
    pub delta_mw: f64,
    /// Rydberg laser Rabi amplitude |Ω_l| (register and ancilla), rad/s.
    pub omega_l: f64,
    /// Inter-gate idle gap δt, s.
    pub gap: f64,
}

impl PulseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_mw > 0.0) || !(self.omega_l > 0.0) {
            return Err(Error::Config("drive amplitudes must be > 0".into()));
        }
        if !(self.gap > 0.0) {
            return Err(Error::Config("inter-gate gap must be > 0".into()));
        }
        if !(self.delta_mw >= 0.0) {
            return Err(Error::Config("delta_mw must be >= 0".into()));
        }
        Ok(())
    }
}

/// Resonant single-transition gate U_φ(θ) with pulse area θ = ∫|Ω|dt:
/// [[cos θ/2, i e^{−iφ} sin θ/2], [i e^{iφ} sin θ/2, cos θ/2]].
pub fn ideal_gate(phase: f64, area: f64) -> CMat {
    let ch = c((area / 2.0).cos());
    let sh = (area / 2.0).sin();
    let mut u = CMat::zeros((2, 2));
    u[[0, 0]] = ch;
    u[[1, 1]] = ch;
    u[[0, 1]] = C64::new(0.0, sh) * C64::from_polar(1.0, -phase);
    u[[1, 0]] = C64::new(0.0, sh) * C64::from_polar(1.0, phase);
    u
}

fn idle(cfg: &RegisterConfig, p: &PulseParams) -> PulseSegment {
    PulseSegment {
        duration: p.gap,
        drive: DriveSettings::off(cfg.k()),
        label: SegmentLabel::Idle,
    }
}

fn mw_pulse(
    cfg: &RegisterConfig,
    p: &PulseParams,
    phase: f64,
    area: f64,
    detuning: Vec<f64>,
    label: SegmentLabel,
) -> PulseSegment {
    let mut drive = DriveSettings::off(cfg.k());
    drive.mw_amp = p.omega_mw;
    drive.mw_phase = phase;
    drive.mw_detuning = detuning;
    PulseSegment {
        duration: area / p.omega_mw,
        drive,
        label,
    }
}

fn laser_pulse(
    cfg: &RegisterConfig,
    p: &PulseParams,
    sel: AtomSel,
    phase: f64,
    area: f64,
    label: SegmentLabel,
) -> PulseSegment {
    let mut drive = DriveSettings::off(cfg.k());
    match sel {
        AtomSel::One(j) => {
            drive.laser_amp[j] = p.omega_l;
            drive.laser_phase[j] = phase;
        }
        AtomSel::All => {
            for j in 0..cfg.k() {
                drive.laser_amp[j] = p.omega_l;
                drive.laser_phase[j] = phase;
            }
        }
    }
    PulseSegment {
        duration: area / p.omega_l,
        drive,
        label,
    }
}

fn ancilla_pulse(cfg: &RegisterConfig, p: &PulseParams, area: f64) -> PulseSegment {
    let mut drive = DriveSettings::off(cfg.k());
    drive.ancilla_laser_amp = p.omega_l;
    drive.ancilla_laser_phase = 0.0;
    PulseSegment {
        duration: area / p.omega_l,
        drive,
        label: SegmentLabel::AncillaTwoPi,
    }
}

/// Preparation: one global U_{−π/2}(π/2) microwave pulse taking every atom
/// from |0⟩ to (|0⟩+|1⟩)/√2, followed by an idle gap.
pub fn compile_preparation(cfg: &RegisterConfig, p: &PulseParams) -> Vec<PulseSegment> {
    vec![
        mw_pulse(
            cfg,
            p,
            -PI / 2.0,
            PI / 2.0,
            vec![0.0; cfg.k()],
            SegmentLabel::Prep,
        ),
        idle(cfg, p),
    ]
}

/// Blockade-conditional Rydberg pulse block.
///
/// Direct scheme: laser π pulses (φ_l = 0) on atoms 0,…,k−1 then the same in
/// reverse order. Ancilla scheme: one simultaneous register π pulse (φ_l = 0),
/// a 2π ancilla pulse, and a simultaneous de-excitation π pulse with φ_l = π.
pub fn compile_rydberg_block(cfg: &RegisterConfig, p: &PulseParams) -> Vec<PulseSegment> {
    let mut segs = Vec::new();
    match cfg.scheme() {
        Scheme::DirectBlockade => {
            for j in 0..cfg.k() {
                segs.push(laser_pulse(
                    cfg,
                    p,
                    AtomSel::One(j),
                    0.0,
                    PI,
                    SegmentLabel::RydbergUp(AtomSel::One(j)),
                ));
                segs.push(idle(cfg, p));
            }
            for j in (0..cfg.k()).rev() {
                segs.push(laser_pulse(
                    cfg,
                    p,
                    AtomSel::One(j),
                    0.0,
                    PI,
                    SegmentLabel::RydbergDown(AtomSel::One(j)),
                ));
                segs.push(idle(cfg, p));
            }
        }
        Scheme::AncillaBlockade => {
            segs.push(laser_pulse(
                cfg,
                p,
                AtomSel::All,
                0.0,
                PI,
                SegmentLabel::RydbergUp(AtomSel::All),
            ));
            segs.push(idle(cfg, p));
            segs.push(ancilla_pulse(cfg, p, 2.0 * PI));
            segs.push(idle(cfg, p));
            segs.push(laser_pulse(
                cfg,
                p,
                AtomSel::All,
                PI,
                PI,
                SegmentLabel::RydbergDown(AtomSel::All),
            ));
            segs.push(idle(cfg, p));
        }
    }
    segs
}

/// Oracle: a global microwave X pulse with per-atom Stark detunings
/// (1 − b_j)Δ_mw, the Rydberg block, and the same detuned X pulse again.
pub fn compile_oracle(cfg: &RegisterConfig, p: &PulseParams) -> Vec<PulseSegment> {
    let detuning: Vec<f64> = cfg
        .marked()
        .iter()
        .map(|b| (1.0 - f64::from(*b)) * p.delta_mw)
        .collect();
    let mut segs = vec![
        mw_pulse(
            cfg,
            p,
            0.0,
            PI,
            detuning.clone(),
            SegmentLabel::OracleXPre,
        ),
        idle(cfg, p),
    ];
    segs.extend(compile_rydberg_block(cfg, p));
    segs.push(mw_pulse(cfg, p, 0.0, PI, detuning, SegmentLabel::OracleXPost));
    segs.push(idle(cfg, p));
    segs
}

/// Grover (inversion-about-the-mean) step: U_{π/2}(π/2), Rydberg block,
/// U_{−π/2}(π/2), all resonant.
pub fn compile_grover(cfg: &RegisterConfig, p: &PulseParams) -> Vec<PulseSegment> {
    let mut segs = vec![
        mw_pulse(
            cfg,
            p,
            PI / 2.0,
            PI / 2.0,
            vec![0.0; cfg.k()],
            SegmentLabel::GroverMap,
        ),
        idle(cfg, p),
    ];
    segs.extend(compile_rydberg_block(cfg, p));
    segs.push(mw_pulse(
        cfg,
        p,
        -PI / 2.0,
        PI / 2.0,
        vec![0.0; cfg.k()],
        SegmentLabel::GroverUnmap,
    ));
    segs.push(idle(cfg, p));
    segs
}

/// Full compiled pulse program.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub segments: Vec<PulseSegment>,
    pub iterations: usize,
    pub cfg: RegisterConfig,
}

impl Schedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn marker_count(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| matches!(s.label, SegmentLabel::MeasureMarker(_)))
            .count()
    }

    /// Well-formedness lint: markers zero-length and in order, every other
    /// segment strictly positive, microwave and laser drives never overlap,
    /// and the ancilla laser never runs alongside any register drive.
    pub fn lint(&self) -> Result<()> {
        let mut marker = 0usize;
        for (i, seg) in self.segments.iter().enumerate() {
            let fail = |msg: String| Err(Error::ScheduleLint(format!("segment {i}: {msg}")));
            match seg.label {
                SegmentLabel::MeasureMarker(n) => {
                    marker += 1;
                    if n != marker {
                        return fail(format!("marker {n} out of order (expected {marker})"));
                    }
                    if seg.duration != 0.0 {
                        return fail("marker must have zero duration".into());
                    }
                }
                _ => {
                    if !(seg.duration > 0.0) {
                        return fail("duration must be > 0".into());
                    }
                }
            }
            let d = &seg.drive;
            let laser_on = d.laser_amp.iter().any(|a| *a > 0.0);
            if d.mw_amp > 0.0 && (laser_on || d.ancilla_laser_amp > 0.0) {
                return fail("microwave and laser drives overlap".into());
            }
            if d.ancilla_laser_amp > 0.0 && (laser_on || d.mw_detuning.iter().any(|x| *x != 0.0)) {
                return fail("ancilla laser overlaps a register drive".into());
            }
            if d.mw_amp == 0.0 && d.mw_detuning.iter().any(|x| *x != 0.0) {
                return fail("stark detuning set while microwave is off".into());
            }
        }
        Ok(())
    }

    /// Text table of the compiled program, one row per segment.
    pub fn dump_table(&self) -> String {
        let k = self.cfg.k();
        let mut out = String::new();
        out.push_str("start_time_s\tduration_s\tlabel\tmw_amp\tmw_phase");
        for j in 0..k {
            out.push_str(&format!("\tdetuning_{j}"));
        }
        for j in 0..k {
            out.push_str(&format!("\tlaser_amp_{j}\tlaser_phase_{j}"));
        }
        if self.cfg.has_ancilla() {
            out.push_str("\tanc_laser_amp\tanc_laser_phase");
        }
        out.push('\n');
        let mut t = 0.0f64;
        for seg in &self.segments {
            out.push_str(&format!(
                "{:.9e}\t{:.9e}\t{}\t{:.6e}\t{:.4}",
                t, seg.duration, seg.label, seg.drive.mw_amp, seg.drive.mw_phase
            ));
            for j in 0..k {
                out.push_str(&format!("\t{:.6e}", seg.drive.mw_detuning[j]));
            }
            for j in 0..k {
                out.push_str(&format!(
                    "\t{:.6e}\t{:.4}",
                    seg.drive.laser_amp[j], seg.drive.laser_phase[j]
                ));
            }
            if self.cfg.has_ancilla() {
                out.push_str(&format!(
                    "\t{:.6e}\t{:.4}",
                    seg.drive.ancilla_laser_amp, seg.drive.ancilla_laser_phase
                ));
            }
            out.push('\n');
            t += seg.duration;
        }
        out
    }
}

/// Compile the full algorithm: preparation plus `iterations` × (oracle,
/// Grover), a measurement marker after each iteration.
pub fn compile_algorithm(
    cfg: &RegisterConfig,
    p: &PulseParams,
    iterations: usize,
) -> Result<Schedule> {
    p.validate()?;
    if iterations == 0 {
        return Err(Error::NoIterations);
    }
    let mut segments = compile_preparation(cfg, p);
    for it in 1..=iterations {
        segments.extend(compile_oracle(cfg, p));
        segments.extend(compile_grover(cfg, p));
        segments.push(PulseSegment {
            duration: 0.0,
            drive: DriveSettings::off(cfg.k()),
            label: SegmentLabel::MeasureMarker(it),
        });
    }
    let schedule = Schedule {
        segments,
        iterations,
        cfg: cfg.clone(),
    };
    schedule.lint()?;
    Ok(schedule)
}
