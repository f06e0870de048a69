//! CREMI-style HDF5 containers.
//!
//! Volumes are stored `[z, y, x]` as in CREMI, with `resolution` and `offset`
//! attributes in `(z, y, x)` nm. Annotation locations are `(z, y, x)` nm rows.
//! The API converts everything to `(x, y, z)` at this boundary. Edge volumes
//! are the exception: they are stored `[n_e, x, y, z]` with `(x, y, z)`
//! attributes.

use std::collections::HashMap;
use std::path::Path;

use hdf5::types::{VarLenAscii, VarLenUnicode};
use hdf5::{Dataset, File, Group, H5Type};
use ndarray::{Array2, Array3, Array4, Axis};

use super::atomic_write;
use crate::annotation::{PointAnnotationSet, SynapticPartnerAnnotation};
use crate::encode::EdgeScoreVolume;
use crate::error::{Error, Result};
use crate::geometry::VolumeGeometry;
use crate::offsets::OffsetSet;
use crate::volume::{Label, SegmentationVolume};

pub const RAW: &str = "volumes/raw";
pub const NEURON_IDS: &str = "volumes/labels/neuron_ids";
pub const EDGE_SCORES: &str = "volumes/pred_syn_partner_scores";
pub const EDGE_LABELS: &str = "volumes/labels/syn_partner_edges";
pub const ANNOTATION_IDS: &str = "annotations/ids";
pub const ANNOTATION_TYPES: &str = "annotations/types";
pub const ANNOTATION_LOCATIONS: &str = "annotations/locations";
pub const PARTNERS: &str = "annotations/presynaptic_site/partners";
/// Optional partner identifiers, one per row of [`PARTNERS`].
pub const PARTNER_IDS: &str = "annotations/presynaptic_site/partner_ids";

const PRE_TYPE: &str = "presynaptic_site";
const POST_TYPE: &str = "postsynaptic_site";
const PROVENANCE_ATTR: &str = "parameters";

/// Contents of a CREMI container.
#[derive(Debug, Clone, PartialEq)]
pub struct CremiContainer {
    /// Raw intensities `[x, y, z]`, if present.
    pub raw: Option<Array3<u8>>,
    pub segmentation: SegmentationVolume,
    pub annotations: PointAnnotationSet,
}

/// Which edge dataset a container holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeDataset {
    /// Predicted scores, float32.
    Scores,
    /// Ground-truth edge labels, uint8.
    Labels,
}

impl EdgeDataset {
    pub fn path(self) -> &'static str {
        match self {
            EdgeDataset::Scores => EDGE_SCORES,
            EdgeDataset::Labels => EDGE_LABELS,
        }
    }
}

fn rev<T: Copy>(a: [T; 3]) -> [T; 3] {
    [a[2], a[1], a[0]]
}

fn container_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Container { path: path.to_path_buf(), msg: msg.into() }
}

fn create_file(path: &Path) -> Result<File> {
    Ok(File::with_options().with_fcpl(|p| p.obj_track_times(false)).create(path)?)
}

fn open_file(path: &Path) -> Result<File> {
    if !path.exists() {
        return Err(container_err(path, "file does not exist"));
    }
    File::open(path).map_err(|e| container_err(path, format!("cannot open as HDF5: {e}")))
}

fn dataset(file: &File, path: &Path, name: &str) -> Result<Dataset> {
    file.dataset(name).map_err(|_| container_err(path, format!("missing dataset `{name}`")))
}

fn write_f64_attr(ds: &Dataset, name: &str, values: &[f64]) -> Result<()> {
    ds.new_attr::<f64>().shape(values.len()).create(name)?.write(values)?;
    Ok(())
}

fn read_f64_attr(ds: &Dataset, name: &str) -> Option<Vec<f64>> {
    ds.attr(name).ok()?.read_raw::<f64>().ok()
}

fn write_provenance(file: &File, provenance: &str) -> Result<()> {
    let value: VarLenUnicode = provenance
        .parse()
        .map_err(|e| Error::Parameter(format!("provenance text is not valid for HDF5: {e:?}")))?;
    file.new_attr::<VarLenUnicode>().create(PROVENANCE_ATTR)?.write_scalar(&value)?;
    Ok(())
}

/// The `parameters` attribute written with every output, if any.
pub fn read_provenance(path: &Path) -> Result<Option<String>> {
    let file = open_file(path)?;
    let Ok(attr) = file.attr(PROVENANCE_ATTR) else { return Ok(None) };
    Ok(Some(attr.read_scalar::<VarLenUnicode>()?.as_str().to_string()))
}

fn new_dataset<T: H5Type>(group: &Group, name: &str, data: ndarray::ArrayViewD<'_, T>) -> Result<Dataset> {
    Ok(group.new_dataset_builder().obj_track_times(false).with_data(&data).create(name)?)
}

fn write_volume<T: H5Type + Copy>(file: &File, name: &str, xyz: &Array3<T>, g: &VolumeGeometry) -> Result<()> {
    let zyx = xyz.view().permuted_axes([2, 1, 0]).as_standard_layout().into_owned();
    let ds = new_dataset(file, name, zyx.view().into_dyn())?;
    write_f64_attr(&ds, "resolution", &rev(g.resolution()))?;
    write_f64_attr(&ds, "offset", &rev(g.origin()))?;
    Ok(())
}

fn read_volume<T: H5Type + Copy>(ds: &Dataset, path: &Path, name: &str) -> Result<(Array3<T>, VolumeGeometry)> {
    let zyx = ds
        .read::<T, ndarray::Ix3>()
        .map_err(|e| container_err(path, format!("`{name}` is not a 3D volume of the expected type: {e}")))?;
    let xyz = zyx.permuted_axes([2, 1, 0]).as_standard_layout().into_owned();
    let dim = xyz.dim();
    let resolution = read_f64_attr(ds, "resolution")
        .ok_or_else(|| container_err(path, format!("`{name}` has no resolution attribute")))?;
    let resolution: [f64; 3] = resolution
        .try_into()
        .map_err(|_| container_err(path, format!("`{name}` resolution attribute must have 3 entries")))?;
    let origin: [f64; 3] = read_f64_attr(ds, "offset").and_then(|v| v.try_into().ok()).unwrap_or([0.0; 3]);
    let g = VolumeGeometry::new([dim.0, dim.1, dim.2], rev(resolution), rev(origin))
        .map_err(|e| container_err(path, format!("`{name}`: {e}")))?;
    Ok((xyz, g))
}

fn write_annotations(file: &File, set: &PointAnnotationSet) -> Result<()> {
    let group = file.create_group("annotations")?;
    let n = set.len();
    let mut ids = Vec::with_capacity(2 * n);
    let mut types: Vec<VarLenUnicode> = Vec::with_capacity(2 * n);
    let mut locations = Array2::<f64>::zeros((2 * n, 3));
    let mut partners = Array2::<u64>::zeros((n, 2));
    let mut partner_ids = Vec::with_capacity(n);
    let pre: VarLenUnicode = PRE_TYPE.parse().unwrap();
    let post: VarLenUnicode = POST_TYPE.parse().unwrap();
    for (i, a) in set.iter().enumerate() {
        let (pre_id, post_id) = (2 * i as u64, 2 * i as u64 + 1);
        ids.extend([pre_id, post_id]);
        types.extend([pre.clone(), post.clone()]);
        for (row, p) in [(2 * i, a.pre_location), (2 * i + 1, a.post_location)] {
            for (c, v) in rev(p).into_iter().enumerate() {
                locations[[row, c]] = v;
            }
        }
        partners[[i, 0]] = pre_id;
        partners[[i, 1]] = post_id;
        partner_ids.push(a.id);
    }
    let ids = ndarray::Array1::from(ids);
    new_dataset(&group, "ids", ids.view().into_dyn())?;
    let types = ndarray::Array1::from(types);
    new_dataset(&group, "types", types.view().into_dyn())?;
    let loc = new_dataset(&group, "locations", locations.view().into_dyn())?;
    write_f64_attr(&loc, "offset", &[0.0; 3])?;
    let sites = group.create_group("presynaptic_site")?;
    new_dataset(&sites, "partners", partners.view().into_dyn())?;
    let partner_ids = ndarray::Array1::from(partner_ids);
    new_dataset(&sites, "partner_ids", partner_ids.view().into_dyn())?;
    Ok(())
}

fn read_strings(ds: &Dataset) -> Option<Vec<String>> {
    if let Ok(v) = ds.read_raw::<VarLenUnicode>() {
        return Some(v.iter().map(|s| s.as_str().to_string()).collect());
    }
    if let Ok(v) = ds.read_raw::<VarLenAscii>() {
        return Some(v.iter().map(|s| s.as_str().to_string()).collect());
    }
    None
}

fn read_annotations(file: &File, path: &Path, geometry: VolumeGeometry) -> Result<PointAnnotationSet> {
    let ids = dataset(file, path, ANNOTATION_IDS)?.read_raw::<u64>()?;
    let types_ds = dataset(file, path, ANNOTATION_TYPES)?;
    let types = read_strings(&types_ds).ok_or_else(|| container_err(path, "`annotations/types` is not a string dataset"))?;
    let loc_ds = dataset(file, path, ANNOTATION_LOCATIONS)?;
    let locations = loc_ds
        .read::<f64, ndarray::Ix2>()
        .map_err(|e| container_err(path, format!("`{ANNOTATION_LOCATIONS}` must be an N x 3 float array: {e}")))?;
    if locations.ncols() != 3 || locations.nrows() != ids.len() || types.len() != ids.len() {
        return Err(container_err(path, "annotation ids, types and locations disagree in length"));
    }
    let offset: [f64; 3] = read_f64_attr(&loc_ds, "offset").and_then(|v| v.try_into().ok()).unwrap_or([0.0; 3]);
    let mut sites: HashMap<u64, (usize, &str)> = HashMap::with_capacity(ids.len());
    for (row, &id) in ids.iter().enumerate() {
        if sites.insert(id, (row, types[row].as_str())).is_some() {
            return Err(container_err(path, format!("duplicate annotation id {id}")));
        }
    }
    let partners = dataset(file, path, PARTNERS)?
        .read::<u64, ndarray::Ix2>()
        .map_err(|e| container_err(path, format!("`{PARTNERS}` must be an M x 2 integer array: {e}")))?;
    if partners.nrows() > 0 && partners.ncols() != 2 {
        return Err(container_err(path, format!("`{PARTNERS}` must have 2 columns")));
    }
    let partner_ids = match file.dataset(PARTNER_IDS) {
        Ok(ds) => ds.read_raw::<u64>()?,
        Err(_) => (0..partners.nrows() as u64).collect(),
    };
    if partner_ids.len() != partners.nrows() {
        return Err(container_err(path, "partner ids and partner table disagree in length"));
    }
    let location = |id: u64, want: &str| -> Result<[f64; 3]> {
        let &(row, kind) = sites
            .get(&id)
            .ok_or_else(|| container_err(path, format!("partner table references unknown annotation id {id}")))?;
        if kind != want {
            return Err(container_err(path, format!("annotation {id} has type `{kind}`, expected `{want}`")));
        }
        let zyx = [0, 1, 2].map(|c| locations[[row, c]] + offset[c]);
        Ok(rev(zyx))
    };
    let mut anns = Vec::with_capacity(partners.nrows());
    for (row, pair) in partners.axis_iter(Axis(0)).enumerate() {
        anns.push(SynapticPartnerAnnotation::new(
            partner_ids[row],
            location(pair[0], PRE_TYPE)?,
            location(pair[1], POST_TYPE)?,
        ));
    }
    PointAnnotationSet::new(anns, geometry).map_err(|e| container_err(path, e.to_string()))
}

/// Writes segmentation, annotations and optional raw data.
pub fn save_container(path: &Path, c: &CremiContainer, provenance: &str) -> Result<()> {
    c.annotations.geometry().ensure_same(c.segmentation.geometry(), "annotations vs segmentation")?;
    atomic_write(path, |tmp| {
        let file = create_file(tmp)?;
        let g = c.segmentation.geometry();
        if let Some(raw) = &c.raw {
            let d = raw.dim();
            if [d.0, d.1, d.2] != g.shape() {
                return Err(Error::GeometryMismatch("raw volume shape differs from segmentation".into()));
            }
            write_volume(&file, RAW, raw, g)?;
        }
        write_volume(&file, NEURON_IDS, c.segmentation.labels(), g)?;
        write_annotations(&file, &c.annotations)?;
        write_provenance(&file, provenance)?;
        Ok(())
    })
}

pub fn load_segmentation(path: &Path) -> Result<SegmentationVolume> {
    let file = open_file(path)?;
    let ds = dataset(&file, path, NEURON_IDS)?;
    let (labels, g) = read_volume::<Label>(&ds, path, NEURON_IDS)?;
    SegmentationVolume::new(g, labels)
}

pub fn load_container(path: &Path) -> Result<CremiContainer> {
    let file = open_file(path)?;
    let ds = dataset(&file, path, NEURON_IDS)?;
    let (labels, g) = read_volume::<Label>(&ds, path, NEURON_IDS)?;
    let segmentation = SegmentationVolume::new(g, labels)?;
    let raw = match file.dataset(RAW) {
        Ok(ds) => Some(read_volume::<u8>(&ds, path, RAW)?.0),
        Err(_) => None,
    };
    let annotations = read_annotations(&file, path, g)?;
    Ok(CremiContainer { raw, segmentation, annotations })
}

/// Annotation tables only, validated against `geometry`.
pub fn load_annotations(path: &Path, geometry: VolumeGeometry) -> Result<PointAnnotationSet> {
    let file = open_file(path)?;
    read_annotations(&file, path, geometry)
}

/// A container holding only annotation tables.
pub fn save_annotations(path: &Path, set: &PointAnnotationSet, provenance: &str) -> Result<()> {
    atomic_write(path, |tmp| {
        let file = create_file(tmp)?;
        write_annotations(&file, set)?;
        write_provenance(&file, provenance)?;
        Ok(())
    })
}

pub fn save_edge_volume(path: &Path, vol: &EdgeScoreVolume, kind: EdgeDataset, provenance: &str) -> Result<()> {
    if kind == EdgeDataset::Labels && !vol.is_binary() {
        return Err(Error::Parameter("edge labels must be binary".into()));
    }
    atomic_write(path, |tmp| {
        let file = create_file(tmp)?;
        let ds = match kind {
            EdgeDataset::Scores => new_dataset(&file, EDGE_SCORES, vol.scores().view().into_dyn())?,
            EdgeDataset::Labels => {
                let bytes: Array4<u8> = vol.scores().mapv(|s| s as u8);
                new_dataset(&file, EDGE_LABELS, bytes.view().into_dyn())?
            }
        };
        let o = vol.offsets();
        let offsets: Vec<f64> = o.offsets_nm().iter().flatten().copied().collect();
        ds.new_attr::<f64>().shape((o.len(), 3)).create("offsets_nm")?.write_raw(&offsets)?;
        ds.new_attr::<f64>().create("r_syn_nm")?.write_scalar(&o.r_syn_nm())?;
        write_f64_attr(&ds, "resolution", &vol.geometry().resolution())?;
        write_f64_attr(&ds, "origin", &vol.geometry().origin())?;
        write_provenance(&file, provenance)?;
        Ok(())
    })
}

/// Reads predicted scores if present, otherwise ground-truth edge labels.
pub fn load_edge_volume(path: &Path) -> Result<(EdgeScoreVolume, EdgeDataset)> {
    let file = open_file(path)?;
    let (ds, kind) = if let Ok(ds) = file.dataset(EDGE_SCORES) {
        (ds, EdgeDataset::Scores)
    } else if let Ok(ds) = file.dataset(EDGE_LABELS) {
        (ds, EdgeDataset::Labels)
    } else {
        return Err(container_err(path, format!("neither `{EDGE_SCORES}` nor `{EDGE_LABELS}` is present")));
    };
    let scores: Array4<f32> = match kind {
        EdgeDataset::Scores => ds.read::<f32, ndarray::Ix4>(),
        EdgeDataset::Labels => ds.read::<u8, ndarray::Ix4>().map(|a| a.mapv(f32::from)),
    }
    .map_err(|e| container_err(path, format!("`{}` must be a 4D array: {e}", kind.path())))?;
    let attr = |name: &str| {
        read_f64_attr(&ds, name).ok_or_else(|| container_err(path, format!("`{}` lacks the `{name}` attribute", kind.path())))
    };
    let triple = |name: &str| -> Result<[f64; 3]> {
        attr(name)?.try_into().map_err(|_| container_err(path, format!("`{name}` must have 3 entries")))
    };
    let resolution = triple("resolution")?;
    let origin = triple("origin")?;
    let flat = attr("offsets_nm")?;
    if flat.len() % 3 != 0 {
        return Err(container_err(path, "`offsets_nm` must be an n_e x 3 array"));
    }
    let offsets_nm: Vec<[f64; 3]> = flat.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    let r_syn = ds
        .attr("r_syn_nm")
        .and_then(|a| a.read_scalar::<f64>())
        .map_err(|_| container_err(path, "missing `r_syn_nm` attribute"))?;
    let offsets = OffsetSet::new(offsets_nm, r_syn, resolution)?;
    let (_, x, y, z) = scores.dim();
    let g = VolumeGeometry::new([x, y, z], resolution, origin)?;
    Ok((EdgeScoreVolume::new(g, offsets, scores)?, kind))
}
