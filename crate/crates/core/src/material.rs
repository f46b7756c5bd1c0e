//! Orthotropic ply stiffness, in-plane rotation, and through-thickness
//! homogenization of a symmetric layup into one equivalent stiffness.
//!
//! Voigt ordering is (11, 22, 33, 23, 13, 12) throughout, so the shear
//! diagonal reads C44 = G23, C55 = G13, C66 = G12.

use crate::error::{Error, Result};
use crate::linalg::{invert, DMat};
use serde::{Deserialize, Serialize};

/// Engineering constants of an orthotropic ply (moduli in MPa).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineeringConstants {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub g23: f64,
    pub g13: f64,
    pub g12: f64,
    pub nu23: f64,
    pub nu13: f64,
    pub nu12: f64,
}

impl EngineeringConstants {
    pub fn validate(&self) -> Result<()> {
        let moduli = [self.e1, self.e2, self.e3, self.g23, self.g13, self.g12];
        if moduli.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::Material("all moduli must be positive".into()));
        }
        if ![self.nu23, self.nu13, self.nu12].iter().all(|n| n.is_finite()) {
            return Err(Error::Material("Poisson ratios must be finite".into()));
        }
        Ok(())
    }
}

/// Symmetric orthotropic 6x6 stiffness in Voigt notation (MPa).
///
/// Nine independent entries; the zero pattern couples the three normal
/// components and leaves the shear block diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticityMatrix {
    m: [[f64; 6]; 6],
}

impl ElasticityMatrix {
    /// Builds the stiffness from the nine upper-triangle orthotropic entries.
    #[allow(clippy::too_many_arguments)]
    pub fn from_components(
        c11: f64,
        c12: f64,
        c13: f64,
        c22: f64,
        c23: f64,
        c33: f64,
        c44: f64,
        c55: f64,
        c66: f64,
    ) -> Result<Self> {
        let mut m = [[0.0; 6]; 6];
        m[0][0] = c11;
        m[0][1] = c12;
        m[1][0] = c12;
        m[0][2] = c13;
        m[2][0] = c13;
        m[1][1] = c22;
        m[1][2] = c23;
        m[2][1] = c23;
        m[2][2] = c33;
        m[3][3] = c44;
        m[4][4] = c55;
        m[5][5] = c66;
        let out = ElasticityMatrix { m };
        if !out.is_spd() {
            return Err(Error::Material("stiffness matrix is not SPD".into()));
        }
        Ok(out)
    }

    /// Inverts the orthotropic compliance built from engineering constants.
    pub fn from_engineering(ec: &EngineeringConstants) -> Result<Self> {
        ec.validate()?;
        let mut s = DMat::zeros(6, 6);
        s.set(0, 0, 1.0 / ec.e1);
        s.set(0, 1, -ec.nu12 / ec.e1);
        s.set(1, 0, -ec.nu12 / ec.e1);
        s.set(0, 2, -ec.nu13 / ec.e1);
        s.set(2, 0, -ec.nu13 / ec.e1);
        s.set(1, 1, 1.0 / ec.e2);
        s.set(1, 2, -ec.nu23 / ec.e2);
        s.set(2, 1, -ec.nu23 / ec.e2);
        s.set(2, 2, 1.0 / ec.e3);
        s.set(3, 3, 1.0 / ec.g23);
        s.set(4, 4, 1.0 / ec.g13);
        s.set(5, 5, 1.0 / ec.g12);
        if !spd_check(&s) {
            return Err(Error::Material(
                "compliance matrix is not positive definite".into(),
            ));
        }
        let c = invert(&s).map_err(|_| Error::Material("singular compliance matrix".into()))?;
        // symmetrize round-off and restore the exact zero pattern
        ElasticityMatrix::from_components(
            c.get(0, 0),
            0.5 * (c.get(0, 1) + c.get(1, 0)),
            0.5 * (c.get(0, 2) + c.get(2, 0)),
            c.get(1, 1),
            0.5 * (c.get(1, 2) + c.get(2, 1)),
            c.get(2, 2),
            ec.g23,
            ec.g13,
            ec.g12,
        )
    }

    /// Isotropic stiffness, a convenience for tests and verification cases.
    pub fn isotropic(e: f64, nu: f64) -> Result<Self> {
        let g = e / (2.0 * (1.0 + nu));
        ElasticityMatrix::from_engineering(&EngineeringConstants {
            e1: e,
            e2: e,
            e3: e,
            g23: g,
            g13: g,
            g12: g,
            nu23: nu,
            nu13: nu,
            nu12: nu,
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn as_array(&self) -> &[[f64; 6]; 6] {
        &self.m
    }

    /// Stress from a Voigt strain (engineering shear components).
    pub fn stress(&self, strain: [f64; 6]) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (i, row) in self.m.iter().enumerate() {
            out[i] = row.iter().zip(strain).map(|(c, e)| c * e).sum();
        }
        out
    }

    /// In-plane 90-degree rotation: swaps the 1 and 2 material axes.
    pub fn rotate_90(&self) -> Self {
        let c = &self.m;
        ElasticityMatrix::from_components(
            c[1][1], c[0][1], c[1][2], c[0][0], c[0][2], c[2][2], c[4][4], c[3][3], c[5][5],
        )
        .expect("rotation preserves SPD")
    }

    pub fn is_spd(&self) -> bool {
        let mut d = DMat::zeros(6, 6);
        for i in 0..6 {
            for j in 0..6 {
                d.set(i, j, self.m[i][j]);
            }
        }
        spd_check(&d)
    }

    /// True when the orthotropic zero pattern holds exactly.
    pub fn is_orthotropic(&self) -> bool {
        for i in 0..6 {
            for j in 0..6 {
                let coupled = (i < 3 && j < 3) || i == j;
                if !coupled && self.m[i][j] != 0.0 {
                    return false;
                }
            }
        }
        self.m[0][1] == self.m[1][0] && self.m[0][2] == self.m[2][0] && self.m[1][2] == self.m[2][1]
    }
}

/// Cholesky-based SPD test.
fn spd_check(a: &DMat) -> bool {
    let n = a.rows();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

/// Fiber orientation of a ply, restricted to the cross-ply cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Deg0,
    Deg90,
}

/// One ply: thickness (mm), fiber orientation, material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ply {
    pub thickness: f64,
    pub orientation: Orientation,
    pub material: EngineeringConstants,
}

impl Ply {
    /// Ply stiffness in laminate axes (rotation applied).
    pub fn stiffness(&self) -> Result<ElasticityMatrix> {
        let c = ElasticityMatrix::from_engineering(&self.material)?;
        Ok(match self.orientation {
            Orientation::Deg0 => c,
            Orientation::Deg90 => c.rotate_90(),
        })
    }
}

/// Ordered stack of plies, bottom to top.
#[derive(Debug, Clone, PartialEq)]
pub struct Layup {
    plies: Vec<Ply>,
}

impl Layup {
    pub fn new(plies: Vec<Ply>) -> Result<Self> {
        if plies.is_empty() {
            return Err(Error::Material("layup needs at least one ply".into()));
        }
        if plies.iter().any(|p| !(p.thickness > 0.0)) {
            return Err(Error::Material("ply thicknesses must be positive".into()));
        }
        for p in &plies {
            p.material.validate()?;
        }
        Ok(Layup { plies })
    }

    /// Alternating 0/90 stack of `n` equal plies with 0 degrees at the
    /// bottom, the classical cross-ply configuration.
    pub fn cross_ply(n: usize, ply_thickness: f64, material: EngineeringConstants) -> Result<Self> {
        let plies = (0..n)
            .map(|k| Ply {
                thickness: ply_thickness,
                orientation: if k % 2 == 0 {
                    Orientation::Deg0
                } else {
                    Orientation::Deg90
                },
                material,
            })
            .collect();
        Layup::new(plies)
    }

    pub fn plies(&self) -> &[Ply] {
        &self.plies
    }

    pub fn num_plies(&self) -> usize {
        self.plies.len()
    }

    pub fn total_thickness(&self) -> f64 {
        self.plies.iter().map(|p| p.thickness).sum()
    }

    pub fn volume_fractions(&self) -> Vec<f64> {
        let h = self.total_thickness();
        self.plies.iter().map(|p| p.thickness / h).collect()
    }

    /// Interface coordinates from `-h/2` to `h/2`, `n + 1` values.
    pub fn interfaces(&self) -> Vec<f64> {
        let h = self.total_thickness();
        let mut z = vec![-0.5 * h];
        let mut acc = -0.5 * h;
        for p in &self.plies {
            acc += p.thickness;
            z.push(acc);
        }
        z
    }

    /// Mirror symmetry about the mid-plane.
    pub fn is_symmetric(&self) -> bool {
        let n = self.plies.len();
        (0..n / 2).all(|k| self.plies[k] == self.plies[n - 1 - k])
    }

    /// Flipped copy (top becomes bottom).
    pub fn flipped(&self) -> Self {
        let mut plies = self.plies.clone();
        plies.reverse();
        Layup { plies }
    }
}

/// Effective stiffness of the equivalent single-layer laminate.
///
/// Evaluation order matters: the transverse-normal entry comes first, then
/// the normal couplings it feeds, then the in-plane entries. The transverse
/// shear pair is computed exactly in the printed product form and only
/// cross-checked elsewhere against its harmonic-mean simplification.
pub fn homogenize(layup: &Layup) -> Result<ElasticityMatrix> {
    if !layup.is_symmetric() {
        return Err(Error::Homogenization(
            "layup is not mirror-symmetric about the mid-plane; a homogenized \
             single element is only valid for symmetric stacks"
                .into(),
        ));
    }
    let cs: Vec<ElasticityMatrix> = layup
        .plies()
        .iter()
        .map(|p| p.stiffness())
        .collect::<Result<_>>()?;
    let tf = layup.volume_fractions();
    let n = cs.len();
    let c = |k: usize, i: usize, j: usize| cs[k].get(i - 1, j - 1);

    let c33_bar = 1.0 / (0..n).map(|k| tf[k] / c(k, 3, 3)).sum::<f64>();

    let mut c13_bar = (0..n).map(|k| tf[k] * c(k, 1, 3)).sum::<f64>();
    c13_bar += (1..n)
        .map(|k| (c(k, 3, 3) - c33_bar) * tf[k] * (c(0, 1, 3) - c(k, 1, 3)) / c(k, 3, 3))
        .sum::<f64>();

    let mut c23_bar = (0..n).map(|k| tf[k] * c(k, 2, 3)).sum::<f64>();
    c23_bar += (1..n)
        .map(|k| (c(k, 3, 3) - c33_bar) * tf[k] * (c(0, 2, 3) - c(k, 2, 3)) / c(k, 3, 3))
        .sum::<f64>();

    let mut c11_bar = (0..n).map(|k| tf[k] * c(k, 1, 1)).sum::<f64>();
    c11_bar += (1..n)
        .map(|k| (c(k, 1, 3) - c13_bar) * tf[k] * (c(0, 1, 3) - c(k, 1, 3)) / c(k, 3, 3))
        .sum::<f64>();

    let mut c12_bar = (0..n).map(|k| tf[k] * c(k, 1, 2)).sum::<f64>();
    c12_bar += (1..n)
        .map(|k| (c(k, 1, 3) - c13_bar) * tf[k] * (c(0, 2, 3) - c(k, 2, 3)) / c(k, 3, 3))
        .sum::<f64>();

    let mut c22_bar = (0..n).map(|k| tf[k] * c(k, 2, 2)).sum::<f64>();
    c22_bar += (1..n)
        .map(|k| (c(k, 2, 3) - c23_bar) * tf[k] * (c(0, 2, 3) - c(k, 2, 3)) / c(k, 3, 3))
        .sum::<f64>();

    let delta_k: Vec<f64> = (0..n).map(|k| c(k, 4, 4) * c(k, 5, 5)).collect();
    let sum44: f64 = (0..n).map(|k| tf[k] * c(k, 4, 4) / delta_k[k]).sum();
    let sum55: f64 = (0..n).map(|k| tf[k] * c(k, 5, 5) / delta_k[k]).sum();
    let delta = sum44 * sum55;
    let c44_bar = sum44 / delta;
    let c55_bar = sum55 / delta;

    let c66_bar = (0..n).map(|k| tf[k] * c(k, 6, 6)).sum::<f64>();

    ElasticityMatrix::from_components(
        c11_bar, c12_bar, c13_bar, c22_bar, c23_bar, c33_bar, c44_bar, c55_bar, c66_bar,
    )
    .map_err(|_| Error::Homogenization("homogenized stiffness is not SPD".into()))
}
