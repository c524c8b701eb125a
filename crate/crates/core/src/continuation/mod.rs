//! Numerical continuation: equilibrium branches, fold and Hopf curves in
//! `(lambda1, lambda2)`, limit-cycle families and the curve of cycle folds.
//!
//! Parameters enter in logarithmic coordinates; a branch is an ordered list
//! of corrected points with test-function values and tagged special points.

mod cycles;
mod equilibrium;
mod palc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::fmt17;
use crate::model::{ModelParams, State};

pub use cycles::{continue_cycles, cycles_at, lpc_curve, CycleOptions, LimitCycle, Stability};
pub use equilibrium::{continue_equilibria, continue_fold_curve, continue_hopf_curve, PlaneWindow};
pub use palc::ContinuationOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    Equilibrium,
    FoldCurve,
    HopfCurve,
    CycleFamily,
    HomoclinicProxy,
    LpcCurve,
}

impl BranchKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BranchKind::Equilibrium => "equilibrium",
            BranchKind::FoldCurve => "fold_curve",
            BranchKind::HopfCurve => "hopf_curve",
            BranchKind::CycleFamily => "cycle_family",
            BranchKind::HomoclinicProxy => "homoclinic_proxy",
            BranchKind::LpcCurve => "lpc_curve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "SN")]
    SaddleNode,
    #[serde(rename = "H")]
    Hopf,
    #[serde(rename = "BT")]
    TakensBogdanov,
    #[serde(rename = "GH")]
    Bautin,
    #[serde(rename = "LPC")]
    Lpc,
    #[serde(rename = "HOM_APPROX")]
    HomApprox,
}

impl Tag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tag::SaddleNode => "SN",
            Tag::Hopf => "H",
            Tag::TakensBogdanov => "BT",
            Tag::Bautin => "GH",
            Tag::Lpc => "LPC",
            Tag::HomApprox => "HOM_APPROX",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub params: ModelParams,
    /// The equilibrium, or the first shooting node of a cycle.
    pub state: State,
    pub cycle: Option<LimitCycle>,
    pub tests: Vec<f64>,
    /// `||F||_inf` of the defining system after correction.
    pub residual: f64,
    pub arclength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialPoint {
    pub index: usize,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub kind: BranchKind,
    pub test_names: Vec<String>,
    pub points: Vec<BranchPoint>,
    pub special_points: Vec<SpecialPoint>,
    /// Why the branch ended.
    pub end: String,
}

impl Branch {
    pub fn tagged(&self, tag: Tag) -> impl Iterator<Item = &BranchPoint> + '_ {
        self.special_points
            .iter()
            .filter(move |s| s.tag == tag)
            .map(|s| &self.points[s.index])
    }

    pub fn count(&self, tag: Tag) -> usize {
        self.special_points.iter().filter(|s| s.tag == tag).count()
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().map(|p| p.residual).fold(0.0, f64::max)
    }

    fn tag_of(&self, i: usize) -> Option<Tag> {
        self.special_points.iter().find(|s| s.index == i).map(|s| s.tag)
    }
}

/// One row per point; cycle columns are empty for equilibrium-type branches.
pub fn write_branch_csv<W: std::io::Write>(w: W, branch: &Branch) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = [
        "index",
        "kind",
        "lambda1",
        "lambda2",
        "alpha1",
        "alpha2",
        "xc",
        "x",
        "y",
        "period",
        "floquet",
        "amplitude",
        "arclength",
        "residual",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(branch.test_names.iter().cloned());
    header.push("tag".into());
    wr.write_record(&header)?;
    for (i, pt) in branch.points.iter().enumerate() {
        let p = &pt.params;
        let mut row = vec![
            i.to_string(),
            branch.kind.as_str().to_string(),
            fmt17(p.lambda1),
            fmt17(p.lambda2),
            fmt17(p.alpha1),
            fmt17(p.alpha2),
            fmt17(p.xc),
            fmt17(pt.state.x),
            fmt17(pt.state.y),
        ];
        match &pt.cycle {
            Some(c) => row.extend([fmt17(c.period), fmt17(c.nontrivial_floquet), fmt17(c.amplitude())]),
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        row.push(fmt17(pt.arclength));
        row.push(fmt17(pt.residual));
        for k in 0..branch.test_names.len() {
            row.push(pt.tests.get(k).map(|v| fmt17(*v)).unwrap_or_default());
        }
        row.push(branch.tag_of(i).map(|t| t.as_str().to_string()).unwrap_or_default());
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialPointRecord {
    pub branch: String,
    pub index: usize,
    pub tag: Tag,
    pub lambda1: f64,
    pub lambda2: f64,
    pub x: f64,
    pub y: f64,
}

/// Flattened special points of several named branches, for the JSON index.
pub fn special_point_index(branches: &[(String, &Branch)]) -> Vec<SpecialPointRecord> {
    let mut out = Vec::new();
    for (name, b) in branches {
        for s in &b.special_points {
            let p = &b.points[s.index];
            out.push(SpecialPointRecord {
                branch: name.clone(),
                index: s.index,
                tag: s.tag,
                lambda1: p.params.lambda1,
                lambda2: p.params.lambda2,
                x: p.state.x,
                y: p.state.y,
            });
        }
    }
    out
}
