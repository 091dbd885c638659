use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundaryOptions, CurveSpec};

/// A curve to compute: a level set or the phase boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CurveRequest {
    Level { spec: CurveSpec },
    Boundary { alpha_range: (f64, f64), options: BoundaryOptions },
}

impl CurveRequest {
    pub fn boundary(alpha_range: (f64, f64)) -> Self {
        CurveRequest::Boundary { alpha_range, options: BoundaryOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl FigureId {
    pub const ALL: [FigureId; 8] = [
        FigureId::Fig1,
        FigureId::Fig2,
        FigureId::Fig3,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig7,
        FigureId::Fig8,
    ];
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = FigureId::ALL.iter().position(|x| x == self).unwrap() + 1;
        write!(f, "fig{k}")
    }
}

impl FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigureId::ALL
            .iter()
            .find(|f| f.to_string() == s)
            .copied()
            .ok_or_else(|| format!("unknown figure {s:?}; expected fig1..fig8"))
    }
}

/// One output file of a figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureItem {
    /// File stem.
    pub name: String,
    pub curve: CurveRequest,
}

/// The curves whose data make up one figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRecipe {
    pub id: FigureId,
    pub title: String,
    pub items: Vec<FigureItem>,
    /// Choices not fixed by the figure itself.
    pub notes: Vec<String>,
}

/// `√q₀` levels of the estimation-error contour maps.
pub const Q0_LEVELS: [f64; 5] = [1.05, 1.1, 1.2, 1.5, 2.0];
/// `Δ` levels of the susceptibility contour maps.
pub const DELTA_LEVELS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
/// `Δ` levels at `η = 0.3`, where `Δ` saturates at `1/(2η)` as `r → ∞`.
pub const FIG7_DELTA_LEVELS: [f64; 4] = [0.5, 1.0, 1.25, 1.5];
/// Regularizer amplitudes of the shifted `Δ = 1` contour.
pub const FIG6_ETAS: [f64; 4] = [0.01, 0.03, 0.1, 0.3];
/// Relative errors `√q₀ − 1` of the `r(η)` curves.
pub const FIG8_LEVELS: [f64; 3] = [1.01, 1.05, 1.10];

const ALPHA_RANGE: (f64, f64) = (0.6, 0.995);

fn tag(v: f64) -> String {
    format!("{v}").replace('.', "p")
}

fn iso_q0_map(eta: f64) -> Vec<FigureItem> {
    Q0_LEVELS
        .iter()
        .map(|&l| FigureItem {
            name: format!("iso_q0_{}_eta_{}", tag(l), tag(eta)),
            curve: CurveRequest::Level { spec: CurveSpec::iso_q0(l, eta, ALPHA_RANGE) },
        })
        .collect()
}

fn iso_delta_map(eta: f64, levels: &[f64]) -> Vec<FigureItem> {
    levels
        .iter()
        .map(|&l| FigureItem {
            name: format!("iso_delta_{}_eta_{}", tag(l), tag(eta)),
            curve: CurveRequest::Level { spec: CurveSpec::iso_delta(l, eta, ALPHA_RANGE) },
        })
        .collect()
}

impl FigureRecipe {
    pub fn new(id: FigureId) -> Self {
        let levels_note = |what: &str, l: &[f64]| format!("{what} levels {l:?} are a choice of this tool");
        let (title, items, notes) = match id {
            FigureId::Fig1 => (
                "phase boundary r_c(alpha) at eta = 0",
                vec![FigureItem { name: "phase_boundary".into(), curve: CurveRequest::boundary((0.6, 0.999)) }],
                vec![],
            ),
            FigureId::Fig2 => ("iso-q0 contours at eta = 0", iso_q0_map(0.0), vec![levels_note("sqrt(q0)", &Q0_LEVELS)]),
            FigureId::Fig3 => ("iso-q0 contours at eta = 0.01", iso_q0_map(0.01), vec![levels_note("sqrt(q0)", &Q0_LEVELS)]),
            FigureId::Fig4 => ("iso-q0 contours at eta = 0.05", iso_q0_map(0.05), vec![levels_note("sqrt(q0)", &Q0_LEVELS)]),
            FigureId::Fig5 => ("iso-delta contours at eta = 0", iso_delta_map(0.0, &DELTA_LEVELS), vec![levels_note("delta", &DELTA_LEVELS)]),
            FigureId::Fig6 => (
                "delta = 1 contour for several eta",
                FIG6_ETAS
                    .iter()
                    .map(|&eta| FigureItem {
                        name: format!("iso_delta_1_eta_{}", tag(eta)),
                        curve: CurveRequest::Level { spec: CurveSpec::iso_delta(1.0, eta, ALPHA_RANGE) },
                    })
                    .collect(),
                vec![format!("eta family {FIG6_ETAS:?} is a choice of this tool")],
            ),
            FigureId::Fig7 => ("iso-delta contours at eta = 0.3", iso_delta_map(0.3, &FIG7_DELTA_LEVELS), vec![levels_note("delta", &FIG7_DELTA_LEVELS)]),
            FigureId::Fig8 => (
                "r(eta) at alpha = 0.975 for fixed relative error",
                FIG8_LEVELS
                    .iter()
                    .map(|&l| FigureItem {
                        name: format!("r_of_eta_{}", tag(l)),
                        curve: CurveRequest::Level { spec: CurveSpec::r_of_eta(0.975, l, (1e-4, 10.0)) },
                    })
                    .collect(),
                vec!["transition width: lower end where |dln r/dln eta| falls below 1/2, upper end where it falls below 2".into()],
            ),
        };
        Self { id, title: title.into(), items, notes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveKind;

    fn level(item: &FigureItem) -> CurveSpec {
        match item.curve {
            CurveRequest::Level { spec } => spec,
            CurveRequest::Boundary { .. } => panic!("boundary"),
        }
    }

    #[test]
    fn ids_parse_and_print() {
        for id in FigureId::ALL {
            assert_eq!(id.to_string().parse::<FigureId>().unwrap(), id);
        }
        assert!("fig9".parse::<FigureId>().is_err());
    }

    #[test]
    fn recipes_match_captions() {
        let etas = |id| FigureRecipe::new(id).items.iter().map(|i| level(i).eta.unwrap()).collect::<Vec<_>>();
        assert!(etas(FigureId::Fig3).iter().all(|&e| e == 0.01));
        assert!(etas(FigureId::Fig4).iter().all(|&e| e == 0.05));
        assert!(etas(FigureId::Fig7).iter().all(|&e| e == 0.3));
        assert_eq!(etas(FigureId::Fig6), FIG6_ETAS.to_vec());
        let f8 = FigureRecipe::new(FigureId::Fig8);
        let specs: Vec<_> = f8.items.iter().map(level).collect();
        assert!(specs.iter().all(|s| s.kind == CurveKind::ROfEta && s.alpha == Some(0.975)));
        assert_eq!(specs.iter().map(|s| s.level.unwrap()).collect::<Vec<_>>(), vec![1.01, 1.05, 1.10]);
        let f1 = FigureRecipe::new(FigureId::Fig1);
        assert_eq!(f1.items.len(), 1);
        assert!(matches!(f1.items[0].curve, CurveRequest::Boundary { .. }));
        for id in FigureId::ALL {
            let r = FigureRecipe::new(id);
            let mut names: Vec<_> = r.items.iter().map(|i| i.name.clone()).collect();
            names.dedup();
            assert_eq!(names.len(), r.items.len());
        }
    }
}
