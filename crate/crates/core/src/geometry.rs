//! Coordinate frames, moving regions and inter-antenna spacing checks.
//!
//! Positions are in meters. The base station owns the global frame with the
//! transmit region centred at the origin; every user owns a local frame whose
//! origin is the centre of its receive region. A user's receive antenna maps to
//! the global frame through `origin + R * local`.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or displacement in meters.
pub type Vec3 = Vector3<f64>;

/// Tolerance on `R Rᵀ = I` and `det R = 1`.
pub const ROTATION_TOLERANCE: f64 = 1e-12;

/// Proper orthogonal coordinate transform from a user's local frame to the
/// global frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Right-handed rotation by `angle` radians about the global z axis.
    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Validates orthogonality and orientation of `m`.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let r = Rotation(m);
        let residual = r.orthogonality_residual();
        let det = m.determinant();
        if residual > ROTATION_TOLERANCE || (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::NotARotation { residual, det });
        }
        Ok(r)
    }

    /// Haar-distributed random rotation (QR of a Gaussian matrix with the
    /// sign ambiguity of each column removed).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let g = Matrix3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let qr = g.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for j in 0..3 {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        if q.determinant() < 0.0 {
            q.column_mut(2).neg_mut();
        }
        Rotation(q)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// `max |(R Rᵀ - I)_ij|`.
    pub fn orthogonality_residual(&self) -> f64 {
        (self.0 * self.0.transpose() - Matrix3::identity()).amax()
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::identity()
    }
}

/// The pair of axes spanning a planar moving region. The remaining axis is
/// pinned at the region centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Plane {
    Xy,
    Xz,
    Yz,
}

impl Plane {
    fn axes(self) -> (usize, usize) {
        match self {
            Plane::Xy => (0, 1),
            Plane::Xz => (0, 2),
            Plane::Yz => (1, 2),
        }
    }
}

/// Axis-aligned planar rectangle in which one antenna may move.
///
/// A zero half-extent collapses the region to a fixed point along that axis,
/// which is how a non-movable receiver is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBox {
    pub center: Vec3,
    pub half_extents: (f64, f64),
    pub plane: Plane,
}

impl RegionBox {
    /// Square region of side `side` meters.
    pub fn square(center: Vec3, side: f64, plane: Plane) -> Result<Self> {
        if !(side >= 0.0) || !side.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "region side must be finite and non-negative, got {side}"
            )));
        }
        Ok(RegionBox {
            center,
            half_extents: (side / 2.0, side / 2.0),
            plane,
        })
    }

    pub fn lower(&self) -> [f64; 3] {
        let mut lo = [self.center.x, self.center.y, self.center.z];
        let (a, b) = self.plane.axes();
        lo[a] -= self.half_extents.0;
        lo[b] -= self.half_extents.1;
        lo
    }

    pub fn upper(&self) -> [f64; 3] {
        let mut up = [self.center.x, self.center.y, self.center.z];
        let (a, b) = self.plane.axes();
        up[a] += self.half_extents.0;
        up[b] += self.half_extents.1;
        up
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let (lo, up) = (self.lower(), self.upper());
        (0..3).all(|i| p[i] >= lo[i] && p[i] <= up[i])
    }

    /// Largest in-plane extent (the diagonal), used as the aperture size.
    pub fn diagonal(&self) -> f64 {
        2.0 * self.half_extents.0.hypot(self.half_extents.1)
    }
}

/// Current antenna placement together with the user frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemLayout {
    /// Transmit antenna positions, global frame.
    pub transmit: Vec<Vec3>,
    /// Receive antenna positions, each in its user's local frame.
    pub receive_local: Vec<Vec3>,
    pub user_origins: Vec<Vec3>,
    pub rotations: Vec<Rotation>,
    /// Minimum inter-antenna spacing at the base station.
    pub min_spacing: f64,
}

impl SystemLayout {
    pub fn users(&self) -> usize {
        self.user_origins.len()
    }

    pub fn receive_global(&self, k: usize) -> Vec3 {
        local_to_global(
            &self.user_origins[k],
            &self.rotations[k],
            &self.receive_local[k],
        )
    }
}

/// Maps a user-local point to the global frame.
pub fn local_to_global(origin: &Vec3, rotation: &Rotation, local: &Vec3) -> Vec3 {
    origin + rotation.apply(local)
}

/// Smallest distance over all antenna pairs; `+inf` for fewer than two.
pub fn min_pairwise_distance(points: &[Vec3]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min((a - b).norm());
        }
    }
    best
}

/// Relative slack on the spacing constraint, so a layout built at exactly
/// `d_M` (a λ/2 ULA, say) is not flagged over rounding in its coordinates.
pub const SPACING_TOLERANCE: f64 = 1e-9;

/// Number of antennas closer than `min_spacing` to at least one other
/// antenna. Spacing equal to `min_spacing`, up to [`SPACING_TOLERANCE`], is
/// allowed.
pub fn count_violating_antennas(points: &[Vec3], min_spacing: f64) -> usize {
    let threshold = min_spacing * (1.0 - SPACING_TOLERANCE);
    let mut violating = vec![false; points.len()];
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (points[i] - points[j]).norm() < threshold {
                violating[i] = true;
                violating[j] = true;
            }
        }
    }
    violating.iter().filter(|&&v| v).count()
}

/// Componentwise `max(min(u, upper), lower)`.
pub fn project_into_region(u: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let mut out = u.to_vec();
    project_in_place(&mut out, lower, upper);
    out
}

pub fn project_in_place(u: &mut [f64], lower: &[f64], upper: &[f64]) {
    debug_assert_eq!(u.len(), lower.len());
    debug_assert_eq!(u.len(), upper.len());
    for ((x, &lo), &up) in u.iter_mut().zip(lower).zip(upper) {
        *x = x.min(up).max(lo);
    }
}

/// Packs positions in the particle order `[t_1, …, t_N, r̃_1, …, r̃_K]`.
pub fn flatten_positions(transmit: &[Vec3], receive_local: &[Vec3]) -> Vec<f64> {
    transmit
        .iter()
        .chain(receive_local)
        .flat_map(|p| [p.x, p.y, p.z])
        .collect()
}

/// Inverse of [`flatten_positions`] for a vector of length `3 (n + k)`.
pub fn unflatten_positions(u: &[f64], n: usize, k: usize) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    if u.len() != 3 * (n + k) {
        return Err(Error::Dimension(format!(
            "particle length {} does not match 3(N+K) = {}",
            u.len(),
            3 * (n + k)
        )));
    }
    let points: Vec<Vec3> = u
        .chunks_exact(3)
        .map(|c| Vec3::new(c[0], c[1], c[2]))
        .collect();
    let receive = points[n..].to_vec();
    let mut transmit = points;
    transmit.truncate(n);
    Ok((transmit, receive))
}
