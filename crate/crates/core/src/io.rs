//! JSON file formats for scenes, parameters, arrangements and poses.
//!
//! Every format carries `schema_version` and is written in one canonical
//! form: pretty-printed, fields in declaration order, trailing newline.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::baselines::BaselineModels;
use crate::densities::{CategoryParams, PoseActivityTable};
use crate::dp::PoseFrequency;
use crate::error::{Error, Result};
use crate::geometry::OrientedBox;
use crate::learning::TrainingTrace;
use crate::params::ModelParams;
use crate::scene::{CategoryRegistry, Furniture, ObjectInstance, Room, Scene, DEFAULT_GRID_RESOLUTION};

pub const SCHEMA_VERSION: u32 = 1;
pub const UNITS: &str = "meters";

/// Deserializes JSON text, reporting the line, column and field path of the
/// first failure.
pub fn from_json_text<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse {
            line: inner.line(),
            column: inner.column(),
            path,
            message: strip_position(&inner.to_string()),
        }
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Canonical text: pretty JSON plus a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory values always serialize");
    s.push('\n');
    s
}

fn check_header(schema_version: u32, units: Option<&str>, what: &str) -> Result<()> {
    if schema_version != SCHEMA_VERSION {
        return Err(Error::Validation(format!(
            "unsupported {what} schema_version {schema_version} (expected {SCHEMA_VERSION})"
        )));
    }
    if let Some(u) = units {
        if u != UNITS {
            return Err(Error::Validation(format!("unsupported units '{u}' (expected '{UNITS}')")));
        }
    }
    Ok(())
}

fn is_default_grid(r: &f64) -> bool {
    *r == DEFAULT_GRID_RESOLUTION
}

fn default_grid() -> f64 {
    DEFAULT_GRID_RESOLUTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub schema_version: u32,
    pub units: String,
    pub id: String,
    pub room: Room,
    #[serde(default = "default_grid", skip_serializing_if = "is_default_grid")]
    pub grid_resolution: f64,
    #[serde(default)]
    pub furniture: Vec<Furniture>,
    #[serde(default)]
    pub objects: Vec<ObjectInstance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labeled_placements: Vec<ObjectInstance>,
    /// Categories beyond (or overriding) the built-in registry.
    #[serde(default, skip_serializing_if = "is_empty_registry")]
    pub categories: CategoryRegistry,
}

fn is_empty_registry(r: &CategoryRegistry) -> bool {
    r.0.is_empty()
}

fn normalized(b: &OrientedBox) -> Result<OrientedBox> {
    OrientedBox::new(b.center, b.size, b.yaw)
}

impl SceneFile {
    pub fn into_scene(self) -> Result<Scene> {
        check_header(self.schema_version, Some(&self.units), "scene")?;
        let mut scene = Scene::new(self.id, self.room).with_grid(self.grid_resolution);
        scene.categories = scene.categories.merged(&self.categories);
        let fix = |kind: &str, i: usize, b: &OrientedBox| {
            normalized(b).map_err(|e| Error::Validation(format!("{kind} {i}: {e}")))
        };
        for (i, mut f) in self.furniture.into_iter().enumerate() {
            f.bbox = fix("furniture", i, &f.bbox)?;
            scene.furniture.push(f);
        }
        for (i, mut o) in self.objects.into_iter().enumerate() {
            o.bbox = fix("object", i, &o.bbox)?;
            scene.objects.push(o);
        }
        for (i, mut o) in self.labeled_placements.into_iter().enumerate() {
            o.bbox = fix("labeled placement", i, &o.bbox)?;
            scene.labeled_placements.push(o);
        }
        scene.validate()?;
        Ok(scene)
    }

    pub fn from_scene(scene: &Scene) -> Self {
        let builtin = CategoryRegistry::builtin();
        let custom = scene
            .categories
            .0
            .iter()
            .filter(|(k, v)| builtin.get(k) != Some(**v))
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        SceneFile {
            schema_version: SCHEMA_VERSION,
            units: UNITS.into(),
            id: scene.id.clone(),
            room: scene.room,
            grid_resolution: scene.grid_resolution,
            furniture: scene.furniture.clone(),
            objects: scene.objects.clone(),
            labeled_placements: scene.labeled_placements.clone(),
            categories: CategoryRegistry(custom),
        }
    }
}

/// Parses and validates a scene file.
pub fn parse_scene(text: &str) -> Result<Scene> {
    from_json_text::<SceneFile>(text)?.into_scene()
}

pub fn serialize_scene(scene: &Scene) -> String {
    to_canonical_json(&SceneFile::from_scene(scene))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub schema_version: u32,
    pub categories: std::collections::BTreeMap<String, CategoryParams>,
    pub pose_activity: PoseActivityTable,
    pub pose_type_weights: [f64; 6],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TrainingTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baselines: Option<BaselineModels>,
}

impl ParamsFile {
    pub fn new(params: ModelParams, trace: Option<TrainingTrace>, baselines: Option<BaselineModels>) -> Self {
        ParamsFile {
            schema_version: SCHEMA_VERSION,
            categories: params.categories,
            pose_activity: params.pose_activity,
            pose_type_weights: params.pose_type_weights,
            trace,
            baselines,
        }
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            categories: self.categories.clone(),
            pose_activity: self.pose_activity.clone(),
            pose_type_weights: self.pose_type_weights,
        }
    }
}

pub fn parse_params(text: &str) -> Result<ParamsFile> {
    let f: ParamsFile = from_json_text(text)?;
    check_header(f.schema_version, None, "params")?;
    f.model_params().validate()?;
    Ok(f)
}

/// Predicted objects for one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrangementFile {
    pub schema_version: u32,
    pub units: String,
    pub scene_id: String,
    pub method: String,
    pub objects: Vec<ObjectInstance>,
}

impl ArrangementFile {
    pub fn new(scene_id: &str, method: &str, objects: Vec<ObjectInstance>) -> Self {
        ArrangementFile {
            schema_version: SCHEMA_VERSION,
            units: UNITS.into(),
            scene_id: scene_id.into(),
            method: method.into(),
            objects,
        }
    }
}

pub fn parse_arrangement(text: &str) -> Result<ArrangementFile> {
    let f: ArrangementFile = from_json_text(text)?;
    check_header(f.schema_version, Some(&f.units), "arrangement")?;
    Ok(f)
}

/// Sampled human poses with their frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosesFile {
    pub schema_version: u32,
    pub units: String,
    pub scene_id: String,
    pub samples: usize,
    pub poses: Vec<PoseFrequency>,
}

impl PosesFile {
    pub fn new(scene_id: &str, samples: usize, poses: Vec<PoseFrequency>) -> Self {
        PosesFile {
            schema_version: SCHEMA_VERSION,
            units: UNITS.into(),
            scene_id: scene_id.into(),
            samples,
            poses,
        }
    }
}
