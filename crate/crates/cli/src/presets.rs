//! Ready-made experiments for the reference figures.
//!
//! Every preset uses K=3, N=2, Ns=1, N_o=1, all clusters active, R = D_c and
//! D_r = R/5. The cluster-distance levels are reconstructions:
//! dense D_c=1, moderate D_c=5, sparse D_c=10.

use std::collections::BTreeMap;

use ianet_core::capacity::TrainingChoice;

use crate::spec::{ExperimentSpec, OutputKind, OutputSpec, Param, SweepAxis};
use crate::CliError;

pub const DENSE: f64 = 1.0;
pub const MODERATE: f64 = 5.0;
pub const SPARSE: f64 = 10.0;

pub const NAMES: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "fig6"];

fn base(pairs: &[(Param, f64)]) -> BTreeMap<Param, f64> {
    let mut m: BTreeMap<Param, f64> = [(Param::K, 3.0), (Param::N, 2.0), (Param::Ns, 1.0), (Param::NO, 1.0), (Param::PA, 1.0)].into_iter().collect();
    m.extend(pairs.iter().copied());
    m
}

fn spec(name: &str, outputs: Vec<OutputKind>, base: BTreeMap<Param, f64>, sweep: Vec<SweepAxis>) -> ExperimentSpec {
    ExperimentSpec {
        name: name.to_string(),
        outputs,
        trials: 10_000,
        seed_root: 1,
        training: TrainingChoice::Given,
        output: OutputSpec { dir: format!("out/{name}").into(), ..Default::default() },
        base,
        sweep,
    }
}

pub fn figure_preset(name: &str) -> Result<ExperimentSpec, CliError> {
    let levels = SweepAxis::list(Param::DC, &[DENSE, MODERATE, SPARSE]);
    let theta_grid = SweepAxis::range(Param::ThetaDb, 0.0, 30.0, 1.0);
    Ok(match name {
        // perfect channel knowledge
        "fig2" => spec(
            name,
            vec![OutputKind::SuccessIa, OutputKind::SuccessSm, OutputKind::Mc],
            base(&[(Param::GammaODb, 30.0), (Param::TT, f64::INFINITY)]),
            vec![levels, theta_grid],
        ),
        "fig3" => spec(
            name,
            vec![OutputKind::SuccessIa, OutputKind::SuccessSm, OutputKind::Bounds, OutputKind::Mc],
            base(&[(Param::GammaODb, 30.0), (Param::TT, 6.0)]),
            vec![levels, theta_grid],
        ),
        "fig4" => spec(
            name,
            vec![OutputKind::Trainopt],
            base(&[(Param::GammaODb, 30.0), (Param::ThetaDb, 20.0)]),
            vec![SweepAxis::list(Param::DC, &[DENSE, MODERATE]), SweepAxis::list(Param::TBlock, &[200.0, 400.0, 700.0, 1000.0])],
        ),
        "fig5" | "fig6" => {
            let mut s = spec(
                name,
                vec![OutputKind::Capacity],
                base(&[(Param::ThetaDb, 17.0), (Param::Epsilon, 0.1)]),
                vec![
                    SweepAxis::list(Param::DC, &[DENSE, MODERATE]),
                    SweepAxis::list(Param::TBlock, &[200.0, 1000.0]),
                    SweepAxis::range(Param::GammaODb, 0.0, 40.0, 2.0),
                ],
            );
            s.training = TrainingChoice::Numeric;
            s
        }
        _ => return Err(CliError::UnknownPreset(name.to_string())),
    })
}
