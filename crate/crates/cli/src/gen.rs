//! Instance generation for `krein gen`.

use std::sync::Arc;

use krein_core::generate::{gen_defective_family, gen_metric, Defect, GenSpec};
use krein_core::{KreinSpace, Tolerances};

use crate::error::CliError;
use crate::format::{
    matrix_to_json, vector_to_json, InstanceFile, InstanceMeta, MetricSpec, OperatorsSpec,
    FORMAT_VERSION,
};

/// Generates the instance described by `spec`. Clean instances carry the
/// generating operators; defective ones only the family.
pub fn generate(spec: &GenSpec, tol: Tolerances) -> Result<InstanceFile, CliError> {
    let bad = |e: krein_core::KreinError| CliError::BadFlags(e.to_string());
    spec.validate().map_err(bad)?;
    let metric = gen_metric(spec, tol).map_err(bad)?;
    let g = matrix_to_json(metric.matrix());
    let space = Arc::new(KreinSpace::new(metric).map_err(bad)?);
    let planted = gen_defective_family(spec, &space).map_err(bad)?;
    let operators = (spec.defect == Defect::None).then(|| OperatorsSpec {
        u_plus: matrix_to_json(planted.base.u_plus()),
        u_minus: matrix_to_json(planted.base.u_minus()),
    });
    Ok(InstanceFile {
        version: FORMAT_VERSION.to_owned(),
        metric: MetricSpec::Matrix(g),
        family: planted
            .family
            .vectors()
            .iter()
            .map(vector_to_json)
            .collect(),
        operators,
        meta: Some(InstanceMeta::new(
            spec.seed,
            spec.cond_cap,
            spec.defect,
            planted.expected,
        )),
    })
}
