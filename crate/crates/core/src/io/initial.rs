//! Initial data generators.
//!
//! The six two-dimensional seeds built from
//! `phi_a = sqrt(g1 g2 / pi) exp(-(g1 x1^2 + g2 x2^2) / 2)` and
//! `phi_b = (x1 + i x2) phi_a`:
//!
//! | kind | field |
//! |------|-------|
//! | a | `phi_a` |
//! | b | `phi_b` |
//! | c | `(x1 + i x2)^4 phi_a` |
//! | d | `(phi_a + phi_b) / 2` |
//! | e | `(1 - Omega) phi_a + Omega phi_b` |
//! | f | `Omega phi_a + (1 - Omega) phi_b` |
//!
//! plus a Gaussian and a sine bump for any dimension and a field file. The
//! samples are returned as they are; the focusing solver normalizes them.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, C64};
use crate::io::field_io::read_field_for;
use crate::problem::{ProblemSpec, Trap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    A,
    B,
    C,
    D,
    E,
    F,
    /// `prod exp(-(x_j - c_j)^2 / (2 w^2))`
    Gaussian,
    /// `prod sin(pi (x_j - lo_j) / L_j)`, vanishing on the box boundary.
    Sine,
    File,
}

impl InitialKind {
    /// The six seeds in selection order.
    pub const SEEDS: [InitialKind; 6] = [
        InitialKind::A,
        InitialKind::B,
        InitialKind::C,
        InitialKind::D,
        InitialKind::E,
        InitialKind::F,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InitialKind::A => "a",
            InitialKind::B => "b",
            InitialKind::C => "c",
            InitialKind::D => "d",
            InitialKind::E => "e",
            InitialKind::F => "f",
            InitialKind::Gaussian => "gaussian",
            InitialKind::Sine => "sine",
            InitialKind::File => "file",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialData {
    pub kind: InitialKind,
    /// Gaussian rates for the seeds; defaults to the harmonic trap's, else ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    /// Centre of the Gaussian; defaults to the origin.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    pub width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData {
            kind: InitialKind::Gaussian,
            gammas: None,
            center: None,
            width: 1.0,
            path: None,
        }
    }
}

impl InitialData {
    pub fn of_kind(kind: InitialKind) -> Self {
        InitialData {
            kind,
            ..Default::default()
        }
    }
}

fn seed_rates(init: &InitialData, spec: &ProblemSpec) -> Result<(f64, f64)> {
    let gammas = match (&init.gammas, spec.trap()) {
        (Some(g), _) => g.clone(),
        (None, Trap::Harmonic(g)) => g.clone(),
        (None, _) => vec![1.0, 1.0],
    };
    match gammas.as_slice() {
        &[g1, g2] if g1 > 0.0 && g2 > 0.0 => Ok((g1, g2)),
        _ => Err(Error::InvalidArgument(format!(
            "seed rates must be two positive numbers, got {gammas:?}"
        ))),
    }
}

pub fn make_initial_data(init: &InitialData, spec: &ProblemSpec) -> Result<Field> {
    let grid = spec.grid().clone();
    let d = grid.dim();
    match init.kind {
        InitialKind::Gaussian => {
            let center = init.center.clone().unwrap_or_else(|| vec![0.0; d]);
            if center.len() != d || !(init.width > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "gaussian needs {d} centre coordinates and a positive width"
                )));
            }
            let w2 = 2.0 * init.width * init.width;
            Field::from_fn(grid, |x| {
                let r2: f64 = x.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum();
                C64::new((-r2 / w2).exp(), 0.0)
            })
        }
        InitialKind::Sine => {
            let axes: Vec<(f64, f64)> = grid.axes().iter().map(|a| (a.lo, a.length())).collect();
            Field::from_fn(grid, |x| {
                let v: f64 = x.iter().zip(&axes).map(|(xi, (lo, l))| (PI * (xi - lo) / l).sin()).product();
                C64::new(v, 0.0)
            })
        }
        InitialKind::File => {
            let path = init
                .path
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("initial kind 'file' needs a path".into()))?;
            read_field_for(path, &grid)
        }
        seed => {
            if d != 2 {
                return Err(Error::InvalidArgument(format!(
                    "initial data ({}) is two-dimensional, grid has d = {d}",
                    seed.name()
                )));
            }
            let (g1, g2) = seed_rates(init, spec)?;
            let rot = spec.rotation();
            let amp = (g1 * g2 / PI).sqrt();
            Field::from_fn(grid, |x| {
                let a = C64::new(amp * (-(g1 * x[0] * x[0] + g2 * x[1] * x[1]) / 2.0).exp(), 0.0);
                let z = C64::new(x[0], x[1]);
                let b = z * a;
                match seed {
                    InitialKind::A => a,
                    InitialKind::B => b,
                    InitialKind::C => z.powu(4) * a,
                    InitialKind::D => (a + b) * 0.5,
                    InitialKind::E => a * (1.0 - rot) + b * rot,
                    _ => a * rot + b * (1.0 - rot),
                }
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, Grid};
    use crate::problem::Parameters;

    fn spec2(rotation: f64) -> ProblemSpec {
        // an even mode count puts the origin on the grid
        let g = Grid::new(&[(-4.0, 4.0), (-4.0, 4.0)], &[16, 16], Boundary::Periodic).unwrap();
        ProblemSpec::new(g, Parameters::cubic(-1.0, 1.0, rotation), Trap::Harmonic(vec![1.0, 1.0])).unwrap()
    }

    fn at(field: &Field, x: f64, y: f64) -> C64 {
        let g = field.grid();
        let i = (0..g.len())
            .find(|&i| (g.coords(0)[i] - x).abs() < 1e-12 && (g.coords(1)[i] - y).abs() < 1e-12)
            .expect("grid point");
        field.values()[i]
    }

    #[test]
    fn seed_values() {
        let spec = spec2(0.3);
        let a = make_initial_data(&InitialData::of_kind(InitialKind::A), &spec).unwrap();
        assert!((at(&a, 0.0, 0.0).re - (1.0 / PI).sqrt()).abs() < 1e-15);
        let b = make_initial_data(&InitialData::of_kind(InitialKind::B), &spec).unwrap();
        assert_eq!(at(&b, 0.0, 0.0), C64::new(0.0, 0.0));
        let e = make_initial_data(&InitialData::of_kind(InitialKind::E), &spec).unwrap();
        let f = make_initial_data(&InitialData::of_kind(InitialKind::F), &spec).unwrap();
        let (x, y) = (1.5, -0.5);
        let expect_e = at(&a, x, y) * 0.7 + at(&b, x, y) * 0.3;
        assert!((at(&e, x, y) - expect_e).norm() < 1e-15);
        let expect_f = at(&a, x, y) * 0.3 + at(&b, x, y) * 0.7;
        assert!((at(&f, x, y) - expect_f).norm() < 1e-15);
        let c = make_initial_data(&InitialData::of_kind(InitialKind::C), &spec).unwrap();
        let z = C64::new(x, y);
        assert!((at(&c, x, y) - z.powu(4) * at(&a, x, y)).norm() < 1e-14);
    }

    #[test]
    fn seeds_need_two_dimensions() {
        let g = Grid::new(&[(-4.0, 4.0)], &[16], Boundary::Periodic).unwrap();
        let spec = ProblemSpec::new(g, Parameters::cubic(-1.0, 1.0, 0.0), Trap::None).unwrap();
        assert!(make_initial_data(&InitialData::of_kind(InitialKind::A), &spec).is_err());
        assert!(make_initial_data(&InitialData::of_kind(InitialKind::Gaussian), &spec).is_ok());
        assert!(make_initial_data(&InitialData::of_kind(InitialKind::File), &spec).is_err());
    }

    #[test]
    fn sine_vanishes_on_the_boundary() {
        let g = Grid::new(&[(0.0, 1.0)], &[8], Boundary::Dirichlet).unwrap();
        let spec = ProblemSpec::new(g, Parameters::cubic(1.0, -10.0, 0.0), Trap::None).unwrap();
        let s = make_initial_data(&InitialData::of_kind(InitialKind::Sine), &spec).unwrap();
        let x = spec.grid().coords(0);
        for (v, xi) in s.values().iter().zip(x) {
            assert!((v.re - (PI * xi).sin()).abs() < 1e-15);
        }
    }
}
