//! Verification suites over a loaded extension: morphism axioms, the
//! morphism/field round trip, and exactness with fullness. Each property
//! yields one verdict with a counterexample dump on failure.

use std::sync::Arc;

use busby_core::extension::spanning_probes;
use busby_core::gen::random_section;
use busby_core::isometry::{IsometryField, IsometryFieldWire};
use busby_core::mesh::{annulus_tower, AnnulusTower};
use busby_core::{
    common_zero, extension_from_busby, isometry_to_delta, Error, ExtensionTriple,
    ProjectionField, SectionField, WSection,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::report::Verdict;
use crate::CliError;

pub struct SuiteContext<'a> {
    pub ext: &'a ExtensionTriple,
    pub boundary_len: usize,
    pub busby_wire: Option<&'a IsometryFieldWire>,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub tower_depth: usize,
}

impl SuiteContext<'_> {
    fn tower(&self) -> Result<Arc<AnnulusTower>, CliError> {
        annulus_tower(self.tower_depth, self.boundary_len)
            .map(Arc::new)
            .map_err(CliError::Compute)
    }
}

pub fn run_suite(name: &str, ctx: &SuiteContext) -> Result<Vec<Verdict>, CliError> {
    match name {
        "morphism" => morphism_suite(ctx),
        "roundtrip" => roundtrip_suite(ctx),
        "exactness" => exactness_suite(ctx),
        "all" => {
            let mut verdicts = morphism_suite(ctx)?;
            verdicts.extend(roundtrip_suite(ctx)?);
            verdicts.extend(exactness_suite(ctx)?);
            Ok(verdicts)
        }
        other => Err(CliError::Input(format!("unknown suite {other:?}"))),
    }
}

fn morphism_suite(ctx: &SuiteContext) -> Result<Vec<Verdict>, CliError> {
    let mut verdicts = Vec::new();
    let tower = ctx.tower()?;
    let computed = ctx.ext.busby_invariant(&tower).map_err(CliError::Compute)?;

    // Descriptor-embedded isometry data is validated vertex by vertex.
    if let Some(wire) = ctx.busby_wire {
        let verdict = match embedded_field(ctx, wire) {
            Ok(field) => match field.check_invariants(ctx.tol) {
                Ok(()) => Verdict {
                    property: "busby_isometry_invariants".into(),
                    pass: true,
                    trials: field.base().n_vertices(),
                    counterexample: None,
                },
                Err(Error::NotAnIsometry { vertex, what, defect }) => Verdict {
                    property: "busby_isometry_invariants".into(),
                    pass: false,
                    trials: field.base().n_vertices(),
                    counterexample: Some(json!({
                        "vertex": vertex,
                        "violated": what,
                        "defect": defect,
                    })),
                },
                Err(e) => Verdict {
                    property: "busby_isometry_invariants".into(),
                    pass: false,
                    trials: 0,
                    counterexample: Some(json!({ "error": e.to_string() })),
                },
            },
            Err(e) => Verdict {
                property: "busby_isometry_invariants".into(),
                pass: false,
                trials: 0,
                counterexample: Some(json!({ "error": e.to_string() })),
            },
        };
        verdicts.push(verdict);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let delta = isometry_to_delta(&computed);
    let samples: Vec<(SectionField, SectionField)> = (0..ctx.trials)
        .map(|_| {
            (
                random_section(&mut rng, ctx.ext.z_bundle()),
                random_section(&mut rng, ctx.ext.z_bundle()),
            )
        })
        .collect();
    let counterexample = busby_core::hilbmod::check_morphism_report(&delta, &samples, ctx.tol);
    verdicts.push(Verdict {
        property: "morphism_identity".into(),
        pass: counterexample.is_none(),
        trials: ctx.trials,
        counterexample: counterexample.map(|(pair, vertex, defect)| {
            json!({ "pair": pair, "vertex": vertex, "defect": defect })
        }),
    });
    Ok(verdicts)
}

fn embedded_field(ctx: &SuiteContext, wire: &IsometryFieldWire) -> busby_core::Result<IsometryField> {
    let base = Arc::new(busby_core::mesh::cycle_space(wire.vertex_map.len())?);
    let target = Arc::new(ProjectionField::trivial(Arc::clone(&base), wire.m_target)?);
    IsometryField::from_wire_unchecked(base, Arc::clone(ctx.ext.z_bundle()), target, wire)
}

fn roundtrip_suite(ctx: &SuiteContext) -> Result<Vec<Verdict>, CliError> {
    let tower = ctx.tower()?;
    let field = ctx.ext.busby_invariant(&tower).map_err(CliError::Compute)?;
    let mut failure = None;
    for trial in 0..ctx.trials {
        let probes = spanning_probes(field.source(), ctx.seed.wrapping_add(trial as u64))
            .map_err(CliError::Compute)?;
        if !busby_core::roundtrip_check_field(&field, &probes) {
            failure = Some(json!({ "trial": trial }));
            break;
        }
        let delta = isometry_to_delta(&field);
        if !busby_core::roundtrip_check_morphism(&delta, &probes) {
            failure = Some(json!({ "trial": trial, "direction": "morphism" }));
            break;
        }
    }
    let mut verdicts = vec![Verdict {
        property: "field_roundtrip".into(),
        pass: failure.is_none(),
        trials: ctx.trials,
        counterexample: failure,
    }];

    let pullback = match ctx.ext.v_bundle() {
        Some(v_bundle) => {
            match extension_from_busby(&field, v_bundle, ctx.ext.z_bundle(), &tower)
                .and_then(|pulled| pulled.busby_invariant(&tower))
            {
                Ok(recovered) => {
                    let distance = recovered.max_distance(&field);
                    Verdict {
                        property: "pullback_roundtrip".into(),
                        pass: distance <= 1e-6,
                        trials: 1,
                        counterexample: (distance > 1e-6)
                            .then(|| json!({ "distance": distance })),
                    }
                }
                Err(e) => Verdict {
                    property: "pullback_roundtrip".into(),
                    pass: false,
                    trials: 1,
                    counterexample: Some(json!({ "error": e.to_string() })),
                },
            }
        }
        None => Verdict {
            property: "pullback_roundtrip".into(),
            pass: true,
            trials: 0,
            counterexample: None,
        },
    };
    verdicts.push(pullback);
    Ok(verdicts)
}

fn exactness_suite(ctx: &SuiteContext) -> Result<Vec<Verdict>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut samples = Vec::with_capacity(ctx.trials);
    for _ in 0..ctx.trials {
        samples.push(ctx.ext.sample_w_section(&mut rng).map_err(CliError::Compute)?);
    }
    let mut exact_counter = None;
    for (i, s) in samples.iter().enumerate() {
        if !ctx
            .ext
            .check_exactness(std::slice::from_ref(s))
            .map_err(CliError::Compute)?
        {
            exact_counter = Some(json!({ "sample": i }));
            break;
        }
    }
    let mut verdicts = vec![Verdict {
        property: "exactness".into(),
        pass: exact_counter.is_none(),
        trials: ctx.trials,
        counterexample: exact_counter,
    }];

    let pairs: Vec<(WSection, WSection)> = samples
        .windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect();
    let pi_ok = ctx.ext.check_pi_morphism(&pairs).map_err(CliError::Compute)?;
    verdicts.push(Verdict {
        property: "pi_morphism_identity".into(),
        pass: pi_ok,
        trials: pairs.len(),
        counterexample: (!pi_ok).then(|| json!({ "detail": "⟨Πs,Πs'⟩ differs from ⟨s,s'⟩|∂" })),
    });

    let sections: Vec<SectionField> = samples
        .iter()
        .filter_map(|w| match w {
            WSection::OnSpace(s) => Some(s.clone()),
            _ => None,
        })
        .collect();
    let zero = common_zero(&sections, ctx.tol);
    verdicts.push(Verdict {
        property: "fullness_no_common_zero".into(),
        pass: zero.is_none(),
        trials: sections.len(),
        counterexample: zero.map(|v| json!({ "vertex": v })),
    });
    Ok(verdicts)
}
