//! Magnetostatics of uniformly z-magnetized rectangular prisms.
//!
//! Coordinates: z is vertical (the magnetization and applied-field axis),
//! x runs along the width W and y along the depth D. The field outside a
//! prism is that of two uniformly charged faces, σ = ±M at z = ±H/2, and
//! every component has a closed form. The uniform applied field carries no
//! gradient and is handled as a scalar added to B_z.

use serde::Serialize;

use crate::constants::{GAMMA_F19, MU_0, MU_0_OVER_4PI};
use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Saturation polarization μ₀M_s of dysprosium at low temperature (T).
pub const DY_POLARIZATION: f64 = 3.7;

/// Uniform applied field at the design point (T).
pub const DEFAULT_EXTERNAL_FIELD: f64 = 7.0;

/// Design geometry: W × H × D = 10 µm × 4 µm × 400 µm.
pub const DESIGN_WIDTH: f64 = 10e-6;
pub const DESIGN_HEIGHT: f64 = 4e-6;
pub const DESIGN_DEPTH: f64 = 400e-6;
/// Crystal height above the top face.
pub const DESIGN_STANDOFF: f64 = 2.07e-6;
/// Published gradient at the design point (T/m); reported, never asserted.
pub const DESIGN_GRADIENT_REPORTED: f64 = 1.4e6;

/// Anything that produces a static magnetic field.
pub trait FieldSource: Sync {
    /// (B_x, B_y, B_z) in tesla.
    fn field_at(&self, r: Vec3) -> Result<Vec3>;

    /// ∇B_z in T/m.
    fn grad_bz_at(&self, r: Vec3) -> Result<Vec3>;

    fn bz_at(&self, r: Vec3) -> Result<f64> {
        Ok(self.field_at(r)?[2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrismMagnet {
    pub label: String,
    /// Edge along x (m).
    pub width: f64,
    /// Edge along z (m).
    pub height: f64,
    /// Edge along y (m).
    pub depth: f64,
    pub center: Vec3,
    /// A/m along +z.
    pub magnetization: f64,
}

impl PrismMagnet {
    pub fn new(
        label: impl Into<String>,
        width: f64,
        height: f64,
        depth: f64,
        center: Vec3,
        magnetization: f64,
    ) -> Result<Self> {
        for (name, v) in [("width", width), ("height", height), ("depth", depth)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("magnet {name} must be positive, got {v}")));
            }
        }
        if !(magnetization >= 0.0 && magnetization.is_finite()) {
            return Err(Error::InvalidArgument(format!("magnetization must be ≥ 0, got {magnetization}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("magnet center must be finite".into()));
        }
        Ok(PrismMagnet { label: label.into(), width, height, depth, center, magnetization })
    }

    /// Same as [`PrismMagnet::new`] with the magnetization given as μ₀M in tesla.
    pub fn from_polarization(
        label: impl Into<String>,
        width: f64,
        height: f64,
        depth: f64,
        center: Vec3,
        polarization: f64,
    ) -> Result<Self> {
        Self::new(label, width, height, depth, center, polarization / MU_0)
    }

    /// Design magnet with its top face centred on the origin.
    pub fn design() -> Self {
        Self::from_polarization(
            "dysprosium",
            DESIGN_WIDTH,
            DESIGN_HEIGHT,
            DESIGN_DEPTH,
            [0.0, 0.0, -0.5 * DESIGN_HEIGHT],
            DY_POLARIZATION,
        )
        .expect("design geometry is valid")
    }

    pub fn polarization(&self) -> f64 {
        MU_0 * self.magnetization
    }

    /// Magnetic moment M·W·H·D (A·m²).
    pub fn moment(&self) -> f64 {
        self.magnetization * self.width * self.height * self.depth
    }

    pub fn max_dimension(&self) -> f64 {
        self.width.max(self.height).max(self.depth)
    }

    /// Point on the vertical axis `standoff` above the top face centre.
    pub fn above_top_center(&self, standoff: f64) -> Vec3 {
        [self.center[0], self.center[1], self.center[2] + 0.5 * self.height + standoff]
    }

    pub fn with_magnetization(&self, magnetization: f64) -> Result<Self> {
        Self::new(self.label.clone(), self.width, self.height, self.depth, self.center, magnetization)
    }

    /// Closed prism, surface included.
    pub fn contains(&self, r: Vec3) -> bool {
        let half = [0.5 * self.width, 0.5 * self.depth, 0.5 * self.height];
        (0..3).all(|k| (r[k] - self.center[k]).abs() <= half[k])
    }

    fn local(&self, r: Vec3) -> Result<Vec3> {
        if r.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("field point must be finite".into()));
        }
        if self.contains(r) {
            return Err(Error::InteriorPoint(r));
        }
        Ok([r[0] - self.center[0], r[1] - self.center[1], r[2] - self.center[2]])
    }

    /// Signed corner offsets (X, s) with X = edge − coordinate.
    fn corners(half: f64, p: f64) -> [(f64, f64); 2] {
        [(half - p, 1.0), (-half - p, -1.0)]
    }

    /// Face sum Σ ±atan(XY/(ZR)) for a face at height offset Z = z − z_face.
    fn face_bz(&self, x: f64, y: f64, z: f64) -> f64 {
        if z == 0.0 {
            // in the face plane but outside the face: the corner terms cancel
            return 0.0;
        }
        let mut g = 0.0;
        for (xa, sa) in Self::corners(0.5 * self.width, x) {
            for (yb, sb) in Self::corners(0.5 * self.depth, y) {
                let r = (xa * xa + yb * yb + z * z).sqrt();
                g += sa * sb * (xa * yb / (z * r)).atan();
            }
        }
        g
    }

    fn face_grad(&self, x: f64, y: f64, z: f64) -> Vec3 {
        let mut g = [0.0; 3];
        for (xa, sa) in Self::corners(0.5 * self.width, x) {
            for (yb, sb) in Self::corners(0.5 * self.depth, y) {
                let (x2, y2, z2) = (xa * xa, yb * yb, z * z);
                let r = (x2 + y2 + z2).sqrt();
                let s = sa * sb;
                // X = edge − x, so ∂/∂x = −∂/∂X
                g[0] -= s * yb * z / ((x2 + z2) * r);
                g[1] -= s * xa * z / ((y2 + z2) * r);
                g[2] -= s * xa * yb * (r * r + z2) / ((x2 + z2) * (y2 + z2) * r);
            }
        }
        g
    }

    /// ∫∫ (x − x')/R³ over a face, i.e. the in-plane field along `x` for
    /// unit charge, with `(hx, hy)` the face half-widths along (x, y).
    fn face_transverse(hx: f64, hy: f64, x: f64, y: f64, z: f64) -> f64 {
        let mut total = 0.0;
        for (xa, sa) in Self::corners(hx, x) {
            let a2 = xa * xa + z * z;
            total += sa * asinh_diff(-hy - y, hy - y, a2);
        }
        total
    }
}

/// asinh(u2/A) − asinh(u1/A) for u1 ≤ u2, A² = a2, without cancellation.
fn asinh_diff(u1: f64, u2: f64, a2: f64) -> f64 {
    let r1 = (u1 * u1 + a2).sqrt();
    let r2 = (u2 * u2 + a2).sqrt();
    if u1 >= 0.0 {
        ((u2 + r2) / (u1 + r1)).ln()
    } else if u2 <= 0.0 {
        ((r1 - u1) / (r2 - u2)).ln()
    } else {
        ((u2 + r2) * (r1 - u1) / a2).ln()
    }
}

impl FieldSource for PrismMagnet {
    fn field_at(&self, r: Vec3) -> Result<Vec3> {
        let [x, y, z] = self.local(r)?;
        let k = MU_0_OVER_4PI * self.magnetization;
        let (zt, zb) = (z - 0.5 * self.height, z + 0.5 * self.height);
        let (hx, hy) = (0.5 * self.width, 0.5 * self.depth);
        let bx = k * (Self::face_transverse(hx, hy, x, y, zt) - Self::face_transverse(hx, hy, x, y, zb));
        let by = k * (Self::face_transverse(hy, hx, y, x, zt) - Self::face_transverse(hy, hx, y, x, zb));
        let bz = k * (self.face_bz(x, y, zt) - self.face_bz(x, y, zb));
        Ok([bx, by, bz])
    }

    fn grad_bz_at(&self, r: Vec3) -> Result<Vec3> {
        let [x, y, z] = self.local(r)?;
        let k = MU_0_OVER_4PI * self.magnetization;
        let top = self.face_grad(x, y, z - 0.5 * self.height);
        let bottom = self.face_grad(x, y, z + 0.5 * self.height);
        Ok([k * (top[0] - bottom[0]), k * (top[1] - bottom[1]), k * (top[2] - bottom[2])])
    }
}

/// Synthetic B_z = b0 + g·(r − origin) with no transverse components.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearField {
    pub b0: f64,
    pub gradient: Vec3,
    pub origin: Vec3,
}

impl FieldSource for LinearField {
    fn field_at(&self, r: Vec3) -> Result<Vec3> {
        let d: f64 = (0..3).map(|k| self.gradient[k] * (r[k] - self.origin[k])).sum();
        Ok([0.0, 0.0, self.b0 + d])
    }

    fn grad_bz_at(&self, _r: Vec3) -> Result<Vec3> {
        Ok(self.gradient)
    }
}

/// Sum of several prisms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Superposition {
    pub parts: Vec<PrismMagnet>,
}

impl FieldSource for Superposition {
    fn field_at(&self, r: Vec3) -> Result<Vec3> {
        let mut b = [0.0; 3];
        for p in &self.parts {
            let f = p.field_at(r)?;
            (0..3).for_each(|k| b[k] += f[k]);
        }
        Ok(b)
    }

    fn grad_bz_at(&self, r: Vec3) -> Result<Vec3> {
        let mut g = [0.0; 3];
        for p in &self.parts {
            let f = p.grad_bz_at(r)?;
            (0..3).for_each(|k| g[k] += f[k]);
        }
        Ok(g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldSample {
    pub position: Vec3,
    pub bz: f64,
    pub grad_bz: Vec3,
}

pub fn sample(src: &dyn FieldSource, r: Vec3) -> Result<FieldSample> {
    Ok(FieldSample { position: r, bz: src.bz_at(r)?, grad_bz: src.grad_bz_at(r)? })
}

/// Field-map table; positions are written at 1 nm resolution.
pub fn field_map_csv(samples: &[FieldSample]) -> String {
    let mut out = String::from("x_m,y_m,z_m,Bz_T,dBz_dx_T_per_m,dBz_dy_T_per_m,dBz_dz_T_per_m\n");
    for s in samples {
        let [x, y, z] = s.position;
        let [gx, gy, gz] = s.grad_bz;
        out.push_str(&format!("{x:.9},{y:.9},{z:.9},{:e},{:e},{:e},{:e}\n", s.bz, gx, gy, gz));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplittingProfile {
    /// ω_i = γ(B_z(r0 + i a ẑ) − B_z(r0)), rad/s.
    pub offsets: Vec<f64>,
    /// ω_{i+1} − ω_i.
    pub local_splittings: Vec<f64>,
}

/// Per-plane Larmor offsets along a vertical column starting at `r0`.
pub fn splitting_profile(src: &dyn FieldSource, r0: Vec3, a: f64, n: usize, gamma: f64) -> Result<SplittingProfile> {
    if n == 0 || !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("need n ≥ 1 planes and a > 0 (got {n}, {a})")));
    }
    let b0 = src.bz_at(r0)?;
    let offsets = (0..n)
        .map(|i| Ok(gamma * (src.bz_at([r0[0], r0[1], r0[2] + i as f64 * a])? - b0)))
        .collect::<Result<Vec<f64>>>()?;
    let local_splittings = offsets.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(SplittingProfile { offsets, local_splittings })
}

/// Splitting with the fluorine gyromagnetic ratio.
pub fn splitting_profile_f19(src: &dyn FieldSource, r0: Vec3, a: f64, n: usize) -> Result<SplittingProfile> {
    splitting_profile(src, r0, a, n, GAMMA_F19)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomogeneityReport {
    /// max − min of B_z over the patch (T).
    pub max_variation: f64,
    /// a·|∂B_z/∂z| at the patch centre (T).
    pub plane_step: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// B_z spread over an `extent_x × extent_y` patch at the height of `r0`,
/// measured against the field step between adjacent planes.
pub fn plane_homogeneity(
    src: &dyn FieldSource,
    r0: Vec3,
    extent_x: f64,
    extent_y: f64,
    a: f64,
    samples: usize,
) -> Result<HomogeneityReport> {
    if samples == 0 || !(extent_x >= 0.0) || !(extent_y >= 0.0) || !(a > 0.0) {
        return Err(Error::InvalidArgument("homogeneity needs samples ≥ 1, extents ≥ 0 and a > 0".into()));
    }
    let coord = |c: f64, extent: f64, i: usize| {
        if samples == 1 {
            c
        } else {
            c - 0.5 * extent + extent * i as f64 / (samples - 1) as f64
        }
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..samples {
        for j in 0..samples {
            let b = src.bz_at([coord(r0[0], extent_x, i), coord(r0[1], extent_y, j), r0[2]])?;
            lo = lo.min(b);
            hi = hi.max(b);
        }
    }
    let max_variation = hi - lo;
    let plane_step = a * src.grad_bz_at(r0)?[2].abs();
    let ratio = if max_variation == 0.0 {
        0.0
    } else if plane_step == 0.0 {
        f64::INFINITY
    } else {
        max_variation / plane_step
    };
    Ok(HomogeneityReport { max_variation, plane_step, ratio, pass: ratio <= 1.0 })
}
