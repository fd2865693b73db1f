//! Descriptor loading: resolve the mesh/bundle references of an extension
//! descriptor relative to its directory and rebuild the core objects,
//! collecting input digests along the way.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use busby_core::bundle::BundleWire;
use busby_core::extension::{boundary_phase_extension, ExtensionDescriptor};
use busby_core::isometry::IsometryFieldWire;
use busby_core::{C64, CMat, ExtensionTriple, ProjectionField, SimplicialSpace, StructuredOperator};

use crate::report::{digest, InputDigest};
use crate::CliError;

pub enum Loaded {
    Extension {
        ext: ExtensionTriple,
        boundary_len: usize,
        busby_wire: Option<IsometryFieldWire>,
    },
    Operator { op: StructuredOperator },
}

pub struct LoadResult {
    pub loaded: Loaded,
    pub digests: Vec<InputDigest>,
}

fn read(path: &Path, digests: &mut Vec<InputDigest>) -> Result<Vec<u8>, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    digests.push(digest(&path.display().to_string(), &bytes));
    Ok(bytes)
}

fn parse<T: serde::de::DeserializeOwned>(bytes: &[u8], what: &str) -> Result<T, CliError> {
    serde_json::from_slice(bytes).map_err(|e| CliError::Input(format!("bad {what} JSON: {e}")))
}

pub fn load(descriptor_path: &str) -> Result<LoadResult, CliError> {
    let path = PathBuf::from(descriptor_path);
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut digests = Vec::new();
    let bytes = read(&path, &mut digests)?;
    let desc: ExtensionDescriptor = parse(&bytes, "descriptor")?;

    match desc.kind.as_str() {
        "disk-wk" | "split" => {
            let mesh_ref = desc
                .mesh
                .as_ref()
                .ok_or_else(|| CliError::Input("descriptor is missing the mesh reference".into()))?;
            let mesh_bytes = read(&dir.join(mesh_ref), &mut digests)?;
            let mesh: SimplicialSpace = parse(&mesh_bytes, "mesh")?;
            let disk = Arc::new(mesh);

            // Bundle files are validated against the mesh when present.
            if let Some(bundle_ref) = &desc.v_bundle {
                let bundle_bytes = read(&dir.join(bundle_ref), &mut digests)?;
                let wire: BundleWire = parse(&bundle_bytes, "bundle")?;
                ProjectionField::from_wire(Arc::clone(&disk), &wire)
                    .map_err(|e| CliError::Input(format!("v_bundle {bundle_ref}: {e}")))?;
            }
            if let Some(bundle_ref) = &desc.z_bundle {
                let bundle_bytes = read(&dir.join(bundle_ref), &mut digests)?;
                let wire: BundleWire = parse(&bundle_bytes, "bundle")?;
                ProjectionField::from_wire(Arc::new(disk.boundary_subcomplex()), &wire)
                    .map_err(|e| CliError::Input(format!("z_bundle {bundle_ref}: {e}")))?;
            }

            let omega: Vec<C64> = desc
                .omega
                .as_ref()
                .ok_or_else(|| CliError::Input("descriptor is missing omega samples".into()))?
                .iter()
                .map(|p| C64::new(p[0], p[1]))
                .collect();
            let k = desc
                .k
                .ok_or_else(|| CliError::Input("descriptor is missing the winding k".into()))?;
            let boundary_len = omega.len();
            let ext = boundary_phase_extension(&disk, omega, k)
                .map_err(|e| CliError::Input(format!("descriptor data rejected: {e}")))?;

            let busby_wire = match &desc.busby {
                Some(busby_ref) => {
                    let busby_bytes = read(&dir.join(busby_ref), &mut digests)?;
                    Some(parse::<IsometryFieldWire>(&busby_bytes, "isometry field")?)
                }
                None => None,
            };
            Ok(LoadResult {
                loaded: Loaded::Extension {
                    ext,
                    boundary_len,
                    busby_wire,
                },
                digests,
            })
        }
        "operator" => {
            let symbol: Vec<C64> = desc
                .symbol
                .as_ref()
                .ok_or_else(|| CliError::Input("operator descriptor is missing the symbol".into()))?
                .iter()
                .map(|p| C64::new(p[0], p[1]))
                .collect();
            let perturbation = match &desc.perturbation {
                Some(rows) => {
                    let d = rows.len();
                    if rows.iter().any(|r| r.len() != d) {
                        return Err(CliError::Input("perturbation block is not square".into()));
                    }
                    CMat::from_fn(d, d, |i, j| C64::new(rows[i][j][0], rows[i][j][1]))
                }
                None => CMat::zeros(0, 0),
            };
            let op = StructuredOperator::new(
                symbol,
                perturbation,
                desc.infinite_defect.unwrap_or(false),
            )
            .map_err(|e| CliError::Input(format!("operator descriptor rejected: {e}")))?;
            Ok(LoadResult {
                loaded: Loaded::Operator { op },
                digests,
            })
        }
        other => Err(CliError::Input(format!("unknown descriptor kind {other:?}"))),
    }
}
