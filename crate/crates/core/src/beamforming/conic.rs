//! Direct second-order cone formulation of the power minimization, solved
//! with the Clarabel interior-point solver.
//!
//! Fixing the phase of each `g_kᴴ w_k` to be real, the SINR constraint of user
//! `k` becomes the cone
//!
//! ```text
//! Re(g_kᴴ w_k) / √γ_k ≥ ‖ [ (g_kᴴ w_i)_{i≠k}, 1 ] ‖₂ ,   Im(g_kᴴ w_k) = 0
//! ```
//!
//! over the real vector `x = [Re w_1, Im w_1, …, Re w_K, Im w_K]` (entries
//! interleaved per antenna) with objective `‖x‖²`.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use num_complex::Complex64;

use super::{
    downlink_powers, noise_normalized, validate_problem, BeamformingSolution, SolveStatus,
};
use crate::channel::ChannelVector;
use crate::error::{Error, Result};

struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Triplets {
    fn push(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            self.rows.push(r);
            self.cols.push(c);
            self.vals.push(v);
        }
    }
}

pub fn minimize_power_socp(
    channels: &[ChannelVector],
    targets: &[f64],
    noise: &[f64],
) -> Result<BeamformingSolution> {
    let (users, antennas) = validate_problem(channels, targets, noise)?;
    let g = noise_normalized(channels, noise);
    let vars = 2 * users * antennas;
    let var = |user: usize, n: usize, imag: bool| 2 * (user * antennas + n) + imag as usize;

    let mut a = Triplets {
        rows: Vec::new(),
        cols: Vec::new(),
        vals: Vec::new(),
    };
    let mut b = Vec::new();
    // Coefficients of Re/Im(g_kᴴ w_i) with respect to (Re w_i, Im w_i):
    // Re = Σ gr·a + gi·b,  Im = Σ gr·b − gi·a.
    let push_re = |a: &mut Triplets, row: usize, gk: &ChannelVector, i: usize, scale: f64| {
        for (n, c) in gk.iter().enumerate() {
            a.push(row, var(i, n, false), scale * c.re);
            a.push(row, var(i, n, true), scale * c.im);
        }
    };
    let push_im = |a: &mut Triplets, row: usize, gk: &ChannelVector, i: usize, scale: f64| {
        for (n, c) in gk.iter().enumerate() {
            a.push(row, var(i, n, false), -scale * c.im);
            a.push(row, var(i, n, true), scale * c.re);
        }
    };

    let mut row = 0;
    for (k, gk) in g.iter().enumerate() {
        // s = b - A x = 0  ⇒  A = Im coefficients
        push_im(&mut a, row, gk, k, 1.0);
        b.push(0.0);
        row += 1;
    }
    let mut cones = vec![SupportedConeT::ZeroConeT(users)];
    for (k, gk) in g.iter().enumerate() {
        let start = row;
        push_re(&mut a, row, gk, k, -1.0 / targets[k].sqrt());
        b.push(0.0);
        row += 1;
        for i in (0..users).filter(|&i| i != k) {
            push_re(&mut a, row, gk, i, -1.0);
            b.push(0.0);
            row += 1;
            push_im(&mut a, row, gk, i, -1.0);
            b.push(0.0);
            row += 1;
        }
        b.push(1.0);
        row += 1;
        cones.push(SupportedConeT::SecondOrderConeT(row - start));
    }

    let a = CscMatrix::new_from_triplets(row, vars, a.rows, a.cols, a.vals);
    let p = CscMatrix::new_from_triplets(
        vars,
        vars,
        (0..vars).collect(),
        (0..vars).collect(),
        vec![2.0; vars],
    );
    let q = vec![0.0; vars];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(200)
        .tol_gap_abs(1e-11)
        .tol_gap_rel(1e-11)
        .tol_feas(1e-11)
        .build()
        .map_err(|e| Error::Conic(format!("{e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
        .map_err(|e| Error::Conic(format!("{e:?}")))?;
    solver.solve();
    let sol = &solver.solution;
    let iterations = sol.iterations as usize;

    match sol.status {
        // The interior-point iterate stops near, not on, the constraint
        // boundary (and may stall just short of the requested tolerances), so
        // its directions are kept and the powers re-solved to make every
        // constraint tight.
        SolverStatus::Solved | SolverStatus::AlmostSolved | SolverStatus::InsufficientProgress => {
            let directions: Vec<ChannelVector> = (0..users)
                .map(|i| {
                    let w = ChannelVector::from_fn(antennas, |n, _| {
                        Complex64::new(sol.x[var(i, n, false)], sol.x[var(i, n, true)])
                    });
                    let norm = w.norm();
                    w / Complex64::new(norm, 0.0)
                })
                .collect();
            let Some(powers) = downlink_powers(&g, &directions, targets) else {
                return Ok(BeamformingSolution::failed(
                    SolveStatus::MaxIterations,
                    users,
                    antennas,
                    iterations,
                ));
            };
            let beamformers = directions
                .into_iter()
                .zip(&powers)
                .map(|(u, p)| u * Complex64::new(p.sqrt(), 0.0))
                .collect();
            Ok(BeamformingSolution::from_beamformers(
                channels,
                beamformers,
                noise,
                targets,
                iterations,
                SolveStatus::MaxIterations,
            ))
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Ok(
            BeamformingSolution::failed(SolveStatus::Infeasible, users, antennas, iterations),
        ),
        other => {
            log::debug!("conic solver stopped with {other:?} after {iterations} iterations");
            Ok(BeamformingSolution::failed(
                SolveStatus::MaxIterations,
                users,
                antennas,
                iterations,
            ))
        }
    }
}
