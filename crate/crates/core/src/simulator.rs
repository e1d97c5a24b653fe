//! Brute-force dynamics in the single-excitation sector: the guided-mode
//! continuum is replaced by a finite set of modes and the Schrödinger
//! equation is integrated directly (rotating-wave approximation).
//!
//! The grid is uniform in `q = √((ω/ω_c)² - 1)`, so cells crowd towards the
//! cutoff where the density of states diverges and every cell weight is a
//! regular integral. Each cell carries two modes, `±k_z`. Modes above the
//! window are folded into a static shift `-∫ G/(ω - ω_a) dω`.

use num_complex::Complex64;

use crate::entanglement::concurrence_single_excitation;
use crate::error::{Error, Result};
use crate::markov::half_line;
use crate::quad::{self, Tolerance};
use crate::special::bessel_j_sequence;
use crate::spectra::{BathSpectrum, Channel};

/// Frequency interval of explicitly represented modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lower: f64,
    pub upper: f64,
}

impl Window {
    /// `[ω_cut, ω_cut + K max(|ω_a - ω_cut|, Γ)]` with `Γ` the largest
    /// single-atom rate of the spectrum.
    pub fn around(spectrum: &BathSpectrum, omega_a: f64, k: f64) -> Window {
        let cut = spectrum.lowest_cutoff();
        let gamma = spectrum.channels().iter().map(|c| c.rate(0).max(c.rate(1))).fold(0.0, f64::max);
        Window { lower: cut, upper: cut + k * (omega_a - cut).abs().max(gamma) }
    }
}

/// Discrete stand-in for the continuum.
#[derive(Debug, Clone)]
pub struct DiscretizedBath {
    /// Mode frequencies, ascending within each channel and each direction.
    pub omega_grid: Vec<f64>,
    /// Frequency width of the cell each mode belongs to.
    pub d_omega: Vec<f64>,
    /// `g_{k,α}`, with `Σ_k g_{k,α} g*_{k,α'}` reproducing `G_{αα'} dω`.
    pub couplings: Vec<[Complex64; 2]>,
    pub window: Window,
    pub n_cells: usize,
    spectrum: BathSpectrum,
}

impl DiscretizedBath {
    pub fn len(&self) -> usize {
        self.omega_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_grid.is_empty()
    }

    pub fn spectrum(&self) -> &BathSpectrum {
        &self.spectrum
    }

    /// `Σ_k |g_{k,α}|²`.
    pub fn total_weight(&self, alpha: usize) -> f64 {
        self.couplings.iter().map(|g| g[alpha].norm_sqr()).sum()
    }
}

fn q_of(channel: &Channel, omega: f64) -> f64 {
    let r = omega / channel.cutoff;
    (r * r - 1.0).max(0.0).sqrt()
}

fn omega_of(channel: &Channel, q: f64) -> f64 {
    channel.cutoff * (1.0 + q * q).sqrt()
}

/// Builds `n_cells` cells per channel (each holding a `±k_z` pair) over the
/// window. The atom positions are those stored in the spectrum.
pub fn discretize(spectrum: &BathSpectrum, window: Window, n_cells: usize) -> Result<DiscretizedBath> {
    if n_cells < 2 {
        return Err(Error::invalid(format!("need at least 2 cells, got {n_cells}")));
    }
    let cut = spectrum.lowest_cutoff();
    if !(window.lower >= cut) {
        return Err(Error::domain(format!(
            "window starts at {} below the cutoff {cut}: there are no modes there",
            window.lower
        )));
    }
    if !(window.upper > window.lower) {
        return Err(Error::invalid("window upper edge must exceed its lower edge"));
    }
    let mut bath = DiscretizedBath {
        omega_grid: Vec::new(),
        d_omega: Vec::new(),
        couplings: Vec::new(),
        window,
        n_cells,
        spectrum: spectrum.clone(),
    };
    let tol = Tolerance { abs: 1e-15, rel: 1e-12, max_intervals: 200 };
    for ch in spectrum.channels() {
        if !ch.is_z_only() {
            return Err(Error::domain(
                "the simulator handles z-dipole TM and near-cutoff channels only",
            ));
        }
        if window.upper <= ch.cutoff {
            continue;
        }
        let q_lo = q_of(ch, window.lower.max(ch.cutoff));
        let q_hi = q_of(ch, window.upper);
        let dq = (q_hi - q_lo) / n_cells as f64;
        let phase_slope = ch.positions().map(|z| ch.cutoff * z / ch.light_speed);
        let cross_sign = if ch.q_weights(0, 1, 0.0).0 < 0.0 { -1.0 } else { 1.0 };
        let mut plus = Vec::with_capacity(n_cells);
        let mut minus = Vec::with_capacity(n_cells);
        for i in 0..n_cells {
            let (a, b) = (q_lo + i as f64 * dq, q_lo + (i + 1) as f64 * dq);
            let mid = 0.5 * (a + b);
            let mut amp = [0.0; 2];
            for (alpha, v) in amp.iter_mut().enumerate() {
                let w = quad::integrate(|q| ch.q_weights(alpha, alpha, q).0, a, b, tol)?.value;
                *v = (0.5 * w.max(0.0)).sqrt();
            }
            amp[1] *= cross_sign;
            let g = |dir: f64| {
                [0, 1].map(|alpha| Complex64::from_polar(amp[alpha], dir * phase_slope[alpha] * mid))
            };
            let (w_mid, width) = (omega_of(ch, mid), omega_of(ch, b) - omega_of(ch, a));
            plus.push((w_mid, width, g(1.0)));
            minus.push((w_mid, width, g(-1.0)));
        }
        for (w, dw, g) in plus.into_iter().chain(minus) {
            bath.omega_grid.push(w);
            bath.d_omega.push(dw);
            bath.couplings.push(g);
        }
    }
    if bath.is_empty() {
        return Err(Error::domain("window lies below every cutoff"));
    }
    Ok(bath)
}

/// Static correction `-∫ G_{αα'}/(ω - ω_a) dω` from the parts of each channel
/// outside the window. Rotating term only.
#[allow(clippy::needless_range_loop)]
pub fn outside_window_shift(bath: &DiscretizedBath, omega_a: f64) -> Result<[[f64; 2]; 2]> {
    let tol = Tolerance { abs: 1e-14, rel: 1e-10, max_intervals: 4000 };
    let mut shift = [[0.0; 2]; 2];
    for ch in bath.spectrum.channels() {
        let q_lo = q_of(ch, bath.window.lower.max(ch.cutoff));
        let q_hi = q_of(ch, bath.window.upper.max(ch.cutoff));
        for alpha in 0..2 {
            for alpha2 in alpha..2 {
                let kernel = |q: f64| 1.0 / (omega_of(ch, q) - omega_a);
                let beta = ch.beta(alpha, alpha2);
                let above = half_line(
                    |x| ch.q_weights(alpha, alpha2, x + q_hi).0 * kernel(x + q_hi),
                    |x| ch.q_weights(alpha, alpha2, x + q_hi).1 * kernel(x + q_hi),
                    beta.abs(),
                    beta.signum(),
                    q_hi,
                    tol,
                )?;
                let mut v = above.value;
                if q_lo > 0.0 {
                    if omega_a > ch.cutoff && omega_a < omega_of(ch, q_lo) {
                        return Err(Error::domain("atomic frequency falls between the cutoff and the window start"));
                    }
                    let below = quad::integrate(
                        |q| {
                            let (a, b) = ch.q_weights(alpha, alpha2, q);
                            (a * (beta * q).cos() + b * (beta * q).sin()) * kernel(q)
                        },
                        0.0,
                        q_lo,
                        tol,
                    )?;
                    v += below.value;
                }
                shift[alpha][alpha2] -= v;
                if alpha != alpha2 {
                    shift[alpha2][alpha] -= v;
                }
            }
        }
    }
    Ok(shift)
}

/// Fraction of the virtual-photon weight `∫ G_{αα}/(ω - ω_a)² dω` that the
/// window resolves, minimised over the two atoms. Only meaningful for `ω_a`
/// below the window or well inside it.
pub fn window_coverage(bath: &DiscretizedBath, omega_a: f64) -> Result<f64> {
    let tol = Tolerance { abs: 1e-300, rel: 1e-9, max_intervals: 4000 };
    let mut worst: f64 = 1.0;
    for alpha in 0..2 {
        let (mut inside, mut total) = (0.0, 0.0);
        for ch in bath.spectrum.channels() {
            let f = |q: f64| {
                let d = omega_of(ch, q) - omega_a;
                ch.q_weights(alpha, alpha, q).0 / (d * d)
            };
            let q_lo = q_of(ch, bath.window.lower.max(ch.cutoff));
            let q_hi = q_of(ch, bath.window.upper.max(ch.cutoff));
            if omega_a > ch.cutoff && omega_a < bath.window.upper {
                // Resonant modes inside the window: everything outside is
                // compared with the resolved part excluding the pole region.
                let q0 = q_of(ch, omega_a);
                let out = quad::integrate_to_infinity(f, q_hi, tol)?.value
                    + if q_lo > 0.0 { quad::integrate(f, 0.0, q_lo, tol)?.value } else { 0.0 };
                let guard = quad::integrate(f, q_lo, (0.5 * q0).max(q_lo), tol)?.value
                    + quad::integrate(f, (1.5 * q0).min(q_hi), q_hi, tol)?.value;
                inside += guard;
                total += guard + out;
                continue;
            }
            let all = quad::integrate_to_infinity(f, 0.0, tol)?.value;
            let out = quad::integrate_to_infinity(f, q_hi, tol)?.value
                + if q_lo > 0.0 { quad::integrate(f, 0.0, q_lo, tol)?.value } else { 0.0 };
            inside += all - out;
            total += all;
        }
        if total > 0.0 {
            worst = worst.min(inside / total);
        }
    }
    Ok(worst)
}

/// Starting amplitudes of the two atoms; the field starts in vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialState {
    #[default]
    Atom1Excited,
    Custom(Complex64, Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagator {
    /// Chebyshev expansion of `e^{-iHτ}` between output times.
    #[default]
    Chebyshev,
    /// Classical fourth-order Runge–Kutta with `max|ω - ω_a| h ≤ 0.1`.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub initial: InitialState,
    /// Norm-drift tolerance; runs drifting beyond ten times this abort.
    pub tol: f64,
    pub propagator: Propagator,
    /// Add the static shift from modes outside the window.
    pub outside_shift: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { initial: InitialState::Atom1Excited, tol: 1e-8, propagator: Propagator::Chebyshev, outside_shift: true }
    }
}

/// Sampled amplitudes. Fields that a model cannot provide are `None`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DynamicsTrace {
    pub t: Vec<f64>,
    pub a1: Vec<Complex64>,
    pub a2: Option<Vec<Complex64>>,
    /// Total photon population.
    pub p_field: Option<Vec<f64>>,
    pub norm: Option<Vec<f64>>,
    pub concurrence: Vec<Option<f64>>,
}

impl DynamicsTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest `|norm - 1|`, zero when the norm is not tracked.
    pub fn norm_drift(&self) -> f64 {
        self.norm.as_ref().map_or(0.0, |n| n.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max))
    }
}

/// Single-excitation Hamiltonian in the frame rotating at `ω_a`.
struct Hamiltonian<'a> {
    detuning: Vec<f64>,
    couplings: &'a [[Complex64; 2]],
    atoms: [[f64; 2]; 2],
}

impl Hamiltonian<'_> {
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let (a, b) = (x[0], x[1]);
        let (mut s0, mut s1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (k, g) in self.couplings.iter().enumerate() {
            let bk = x[k + 2];
            s0 += g[0] * bk;
            s1 += g[1] * bk;
            out[k + 2] = bk * self.detuning[k] + g[0].conj() * a + g[1].conj() * b;
        }
        out[0] = s0 + a * self.atoms[0][0] + b * self.atoms[0][1];
        out[1] = s1 + a * self.atoms[1][0] + b * self.atoms[1][1];
    }

    /// Interval containing the spectrum (Weyl's inequality).
    fn bounds(&self) -> (f64, f64) {
        let lo = self.detuning.iter().copied().fold(0.0, f64::min);
        let hi = self.detuning.iter().copied().fold(0.0, f64::max);
        let g: f64 = self.couplings.iter().map(|g| g[0].norm_sqr() + g[1].norm_sqr()).sum::<f64>().sqrt();
        let t = self.atoms.iter().flatten().map(|v| v.abs()).sum::<f64>();
        (lo - g - t, hi + g + t)
    }
}

/// Integrates the amplitude equations over `t_grid` (ascending, from 0).
pub fn evolve(bath: &DiscretizedBath, omega_a: f64, t_grid: &[f64], opts: EvolveOptions) -> Result<DynamicsTrace> {
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("time grid must start at 0 and increase strictly"));
    }
    let atoms = if opts.outside_shift { outside_window_shift(bath, omega_a)? } else { [[0.0; 2]; 2] };
    let h = Hamiltonian {
        detuning: bath.omega_grid.iter().map(|w| w - omega_a).collect(),
        couplings: &bath.couplings,
        atoms,
    };
    let dim = bath.len() + 2;
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    let (c1, c2) = match opts.initial {
        InitialState::Atom1Excited => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
        InitialState::Custom(a, b) => (a, b),
    };
    let norm0 = c1.norm_sqr() + c2.norm_sqr();
    if !(norm0 > 0.0 && norm0 <= 1.0 + 1e-12) {
        return Err(Error::invalid(format!("initial amplitudes have norm² {norm0}, need (0, 1]")));
    }
    psi[0] = c1;
    psi[1] = c2;

    let mut trace = DynamicsTrace::default();
    let (mut pf, mut nm) = (Vec::new(), Vec::new());
    let mut a2 = Vec::new();
    let mut record = |t: f64, psi: &[Complex64]| -> Result<()> {
        let field: f64 = psi[2..].iter().map(|b| b.norm_sqr()).sum();
        let norm = psi[0].norm_sqr() + psi[1].norm_sqr() + field;
        if (norm - norm0).abs() > 10.0 * opts.tol.max(1e-15) {
            return Err(Error::Convergence(format!(
                "norm drifted to {norm} (from {norm0}) at t = {t}; refine the time step or the grid"
            )));
        }
        trace.t.push(t);
        trace.a1.push(psi[0]);
        a2.push(psi[1]);
        pf.push(field);
        nm.push(norm);
        trace.concurrence.push(Some(concurrence_single_excitation(psi[0], psi[1])));
        Ok(())
    };
    record(0.0, &psi)?;

    let mut work = Workspace::new(dim);
    for w in t_grid.windows(2) {
        let tau = w[1] - w[0];
        match opts.propagator {
            Propagator::Chebyshev => chebyshev_step(&h, &mut psi, tau, &mut work),
            Propagator::Rk4 => {
                let (lo, hi) = h.bounds();
                let h_max = 0.1 / lo.abs().max(hi.abs());
                let steps = (tau / h_max).ceil().max(1.0) as usize;
                for _ in 0..steps {
                    rk4_step(&h, &mut psi, tau / steps as f64, &mut work);
                }
            }
        }
        record(w[1], &psi)?;
    }
    trace.a2 = Some(a2);
    trace.p_field = Some(pf);
    trace.norm = Some(nm);
    Ok(trace)
}

struct Workspace {
    v: [Vec<Complex64>; 4],
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Workspace { v: std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); dim]) }
    }
}

/// `ψ ← e^{-iHτ} ψ` via `e^{-ibτ} Σ (2 - δ_k0) (-i)^k J_k(aτ) T_k((H - b)/a) ψ`.
fn chebyshev_step(h: &Hamiltonian, psi: &mut [Complex64], tau: f64, work: &mut Workspace) {
    let (lo, hi) = h.bounds();
    let (half, center) = (0.5 * (hi - lo), 0.5 * (hi + lo));
    let jn = bessel_j_sequence(half * tau, 1e-17);
    let [prev, cur, next, acc] = &mut work.v;
    let scaled = |x: &[Complex64], out: &mut [Complex64]| {
        h.apply(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = (*o - xi * center) / half;
        }
    };
    prev.copy_from_slice(psi);
    for (a, p) in acc.iter_mut().zip(prev.iter()) {
        *a = p * jn[0];
    }
    if jn.len() > 1 {
        scaled(prev, cur);
        let mut phase = Complex64::new(0.0, -2.0);
        for (a, c) in acc.iter_mut().zip(cur.iter()) {
            *a += c * phase * jn[1];
        }
        for &j in &jn[2..] {
            scaled(cur, next);
            for (n, p) in next.iter_mut().zip(prev.iter()) {
                *n = *n * 2.0 - p;
            }
            phase *= Complex64::new(0.0, -1.0);
            for (a, n) in acc.iter_mut().zip(next.iter()) {
                *a += n * phase * j;
            }
            std::mem::swap(prev, cur);
            std::mem::swap(cur, next);
        }
    }
    let global = Complex64::from_polar(1.0, -center * tau);
    for (p, a) in psi.iter_mut().zip(acc.iter()) {
        *p = a * global;
    }
}

fn rk4_step(h: &Hamiltonian, psi: &mut [Complex64], dt: f64, work: &mut Workspace) {
    let [k, tmp, acc, hv] = &mut work.v;
    let minus_i = Complex64::new(0.0, -1.0);
    acc.copy_from_slice(psi);
    tmp.copy_from_slice(psi);
    for (stage, w) in [(0.5, 1.0), (0.5, 2.0), (1.0, 2.0), (0.0, 1.0)] {
        h.apply(tmp, hv);
        for (ki, hi) in k.iter_mut().zip(hv.iter()) {
            *ki = hi * minus_i;
        }
        for (a, ki) in acc.iter_mut().zip(k.iter()) {
            *a += ki * (w * dt / 6.0);
        }
        for ((t, p), ki) in tmp.iter_mut().zip(psi.iter()).zip(k.iter()) {
            *t = p + ki * (stage * dt);
        }
    }
    psi.copy_from_slice(acc);
}

/// Diagnostics of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub norm_drift: f64,
    /// Largest cell width near the atom times the run length; recurrences
    /// of the discrete bath appear after `≈ 2π/dω`.
    pub d_omega_t: f64,
    pub coverage: f64,
    /// `max |Δ|a1|²|` against a rerun with twice as many cells over the first
    /// part of the run.
    pub refinement_delta: f64,
    pub norm_ok: bool,
    pub recurrence_risk: bool,
    pub coverage_ok: bool,
    pub refinement_ok: bool,
}

impl ConvergenceReport {
    pub fn all_green(&self) -> bool {
        self.norm_ok && !self.recurrence_risk && self.coverage_ok && self.refinement_ok
    }
}

/// Convergence diagnostics for `run`, produced by [`evolve`] on `bath`.
pub fn convergence_report(
    bath: &DiscretizedBath,
    omega_a: f64,
    run: &DynamicsTrace,
    opts: EvolveOptions,
) -> Result<ConvergenceReport> {
    let t_end = *run.t.last().ok_or_else(|| Error::invalid("empty trace"))?;
    let norm_drift = run.norm_drift();
    let cut = bath.spectrum.lowest_cutoff();
    let core = cut + 2.0 * (omega_a - cut).abs().max(1.0);
    let d_omega = bath
        .omega_grid
        .iter()
        .zip(&bath.d_omega)
        .filter(|(w, _)| **w <= core)
        .map(|(_, d)| *d)
        .fold(0.0, f64::max);
    let coverage = window_coverage(bath, omega_a)?;

    // Short rerun: the first quarter of the samples, at least 2.
    let n_short = (run.t.len() / 4).max(2).min(run.t.len());
    let fine = discretize(&bath.spectrum, bath.window, 2 * bath.n_cells)?;
    let rerun = evolve(&fine, omega_a, &run.t[..n_short], opts)?;
    let refinement_delta = rerun
        .a1
        .iter()
        .zip(&run.a1)
        .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
        .fold(0.0, f64::max);

    Ok(ConvergenceReport {
        norm_drift,
        d_omega_t: d_omega * t_end,
        coverage,
        refinement_delta,
        norm_ok: norm_drift <= 1e-6,
        recurrence_risk: d_omega * t_end > 1.0,
        coverage_ok: coverage >= 0.999,
        refinement_ok: refinement_delta <= 5e-3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::BathSpectrum;

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    #[test]
    fn colocated_atoms_get_equal_real_couplings() {
        let spec = BathSpectrum::near_cutoff(1.0, 500.0, 1.0, [0.0, 0.0]);
        let bath = discretize(&spec, Window { lower: 500.0, upper: 1000.0 }, 50).unwrap();
        for g in &bath.couplings {
            assert_eq!(g[0], g[1]);
            assert_eq!(g[0].im, 0.0);
        }
    }

    #[test]
    fn window_below_cutoff_rejected() {
        let spec = BathSpectrum::tm_single_mode(1.0, 500.0, 1.0, [0.0, 1.0]);
        assert!(discretize(&spec, Window { lower: 400.0, upper: 900.0 }, 10).is_err());
    }

    #[test]
    fn weight_sum_matches_integral() {
        let spec = BathSpectrum::tm_single_mode(1.0, 500.0, 1.0, [0.0, 0.3]);
        let w = Window { lower: 500.0, upper: 2000.0 };
        let bath = discretize(&spec, w, 400).unwrap();
        // ∫ Γ ω_c/(2π s) dq = Γ ω_c asinh(q)/(2π)
        let q = ((2000.0f64 / 500.0).powi(2) - 1.0).sqrt();
        let exact = 500.0 * q.asinh() / (2.0 * std::f64::consts::PI);
        assert!((bath.total_weight(0) - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn zero_coupling_is_free() {
        let spec = BathSpectrum::near_cutoff(0.0, 500.0, 1.0, [0.0, 1.0]);
        let bath = discretize(&spec, Window { lower: 500.0, upper: 600.0 }, 20).unwrap();
        let tr = evolve(&bath, 490.0, &grid(1.0, 10), EvolveOptions::default()).unwrap();
        assert!(tr.a1.iter().all(|a| (a - 1.0).norm() < 1e-13));
    }

    #[test]
    fn chebyshev_agrees_with_rk4() {
        let spec = BathSpectrum::near_cutoff(1.0, 50.0, 1.0, [0.0, 0.2]);
        let bath = discretize(&spec, Window { lower: 50.0, upper: 80.0 }, 60).unwrap();
        let t = grid(0.5, 20);
        let a = evolve(&bath, 48.0, &t, EvolveOptions::default()).unwrap();
        let b = evolve(&bath, 48.0, &t, EvolveOptions { propagator: Propagator::Rk4, ..Default::default() }).unwrap();
        for (x, y) in a.a1.iter().zip(&b.a1) {
            assert!((x - y).norm() < 1e-6, "{x} vs {y}");
        }
        assert!(a.norm_drift() < 1e-12);
    }
}
