//! Data-driven limits and their JSON file format.
//!
//! A [`LimitSet`] holds every bound used by the constraint losses: 20 bone
//! length intervals, 4 curvature and 4 angular-distance intervals for the
//! palm, and 15 angle hulls. [`fit_limits`] derives them from a corpus of
//! poses; with `quantile = 0` every corpus sample has zero loss afterwards.
//!
//! File layout (version 1):
//!
//! ```json
//! {
//!   "version": 1,
//!   "metadata": {"source": "...", "samples": 100, "length_unit": "m", "quantile": 0.0},
//!   "bone_length": [[lo, hi], ...20],
//!   "curvature": [[lo, hi], ...4],
//!   "angular_distance": [[lo, hi], ...4],
//!   "angle_hulls": [[[θf, θa], ...10], ...15]
//! }
//! ```

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::angles::{finger_angles, AnglePair};
use crate::error::{Error, Result};
use crate::geometry::Interval;
use crate::hand::{BoneSet, HandPose, NUM_BONES, NUM_FINGER_BONES};
use crate::hull::{build_hull, AngleHull, DEGENERATE_HULL_MARGIN, HULL_SIZE};
use crate::palm::{palm_descriptor, RootBoneLimits, NUM_PALM_GAPS};

pub const LIMITS_VERSION: u64 = 1;
/// Smallest usable corpus.
pub const MIN_CORPUS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitMetadata {
    pub source: String,
    pub samples: usize,
    pub length_unit: String,
    pub quantile: f64,
}

impl Default for LimitMetadata {
    fn default() -> Self {
        LimitMetadata {
            source: String::new(),
            samples: 0,
            length_unit: "m".into(),
            quantile: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitSet {
    pub bone_length: [Interval; NUM_BONES],
    pub curvature: [Interval; NUM_PALM_GAPS],
    pub angular_distance: [Interval; NUM_PALM_GAPS],
    pub angle_hulls: [AngleHull; NUM_FINGER_BONES],
    pub metadata: LimitMetadata,
}

impl LimitSet {
    pub fn root_bone_limits(&self) -> RootBoneLimits {
        RootBoneLimits {
            curvature: self.curvature,
            angular_distance: self.angular_distance,
        }
    }

    pub fn to_json(&self) -> Value {
        let intervals = |xs: &[Interval]| -> Value {
            xs.iter().map(|i| json!([i.lower(), i.upper()])).collect()
        };
        json!({
            "version": LIMITS_VERSION,
            "metadata": self.metadata,
            "bone_length": intervals(&self.bone_length),
            "curvature": intervals(&self.curvature),
            "angular_distance": intervals(&self.angular_distance),
            "angle_hulls": self.angle_hulls.iter().map(|h| json!(h.vertices())).collect::<Value>(),
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::schema("", "expected a JSON object"))?;
        const FIELDS: [&str; 6] = [
            "version",
            "metadata",
            "bone_length",
            "curvature",
            "angular_distance",
            "angle_hulls",
        ];
        if let Some(k) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
            return Err(Error::schema(k.clone(), "unknown field"));
        }
        let version = field(obj, "version", "")?
            .as_u64()
            .ok_or_else(|| Error::schema("version", "expected an unsigned integer"))?;
        if version != LIMITS_VERSION {
            return Err(Error::schema(
                "version",
                format!("unsupported version {version}, expected {LIMITS_VERSION}"),
            ));
        }
        Ok(LimitSet {
            metadata: parse_metadata(field(obj, "metadata", "")?)?,
            bone_length: parse_intervals(field(obj, "bone_length", "")?, "bone_length")?,
            curvature: parse_intervals(field(obj, "curvature", "")?, "curvature")?,
            angular_distance: parse_intervals(field(obj, "angular_distance", "")?, "angular_distance")?,
            angle_hulls: parse_hulls(field(obj, "angle_hulls", "")?)?,
        })
    }
}

fn join(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, parent: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::schema(join(parent, key), "missing field"))
}

fn array_of<'a>(v: &'a Value, len: usize, path: &str) -> Result<&'a Vec<Value>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::schema(path, "expected an array"))?;
    if arr.len() != len {
        return Err(Error::schema(
            path,
            format!("expected {len} entries, found {}", arr.len()),
        ));
    }
    Ok(arr)
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::schema(path, "expected a finite number"))
}

fn parse_metadata(v: &Value) -> Result<LimitMetadata> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::schema("metadata", "expected an object"))?;
    let string = |key: &str| -> Result<String> {
        field(obj, key, "metadata")?
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| Error::schema(join("metadata", key), "expected a string"))
    };
    let samples = field(obj, "samples", "metadata")?
        .as_u64()
        .ok_or_else(|| Error::schema("metadata.samples", "expected an unsigned integer"))?;
    let quantile = match obj.get("quantile") {
        Some(q) => number(q, "metadata.quantile")?,
        None => 0.0,
    };
    Ok(LimitMetadata {
        source: string("source")?,
        samples: samples as usize,
        length_unit: string("length_unit")?,
        quantile,
    })
}

fn parse_intervals<const N: usize>(v: &Value, name: &str) -> Result<[Interval; N]> {
    let arr = array_of(v, N, name)?;
    let mut out = [Interval::point(0.0); N];
    for (i, item) in arr.iter().enumerate() {
        let path = format!("{name}[{i}]");
        let pair = array_of(item, 2, &path)?;
        let lo = number(&pair[0], &format!("{path}[0]"))?;
        let hi = number(&pair[1], &format!("{path}[1]"))?;
        out[i] = Interval::new(lo, hi)
            .map_err(|_| Error::schema(&path, format!("lower bound {lo} exceeds upper bound {hi}")))?;
    }
    Ok(out)
}

fn parse_hulls(v: &Value) -> Result<[AngleHull; NUM_FINGER_BONES]> {
    let arr = array_of(v, NUM_FINGER_BONES, "angle_hulls")?;
    let mut hulls = Vec::with_capacity(NUM_FINGER_BONES);
    for (k, item) in arr.iter().enumerate() {
        let path = format!("angle_hulls[{k}]");
        let verts = array_of(item, HULL_SIZE, &path)?;
        let mut vertices = [[0.0; 2]; HULL_SIZE];
        for (j, vert) in verts.iter().enumerate() {
            let vp = format!("{path}[{j}]");
            let pair = array_of(vert, 2, &vp)?;
            vertices[j] = [
                number(&pair[0], &format!("{vp}[0]"))?,
                number(&pair[1], &format!("{vp}[1]"))?,
            ];
        }
        let hull = AngleHull::new(vertices).map_err(|e| Error::schema(&path, e.to_string()))?;
        hulls.push(hull);
    }
    Ok(hulls.try_into().expect("fifteen hulls"))
}

pub fn save_limits(set: &LimitSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(&set.to_json()).expect("limit sets serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_limits(path: impl AsRef<Path>) -> Result<LimitSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_limits(&text)
}

/// Parse limit-file text. Syntax errors, including truncation, are reported
/// with the first field the document fails to provide where possible.
pub fn parse_limits(text: &str) -> Result<LimitSet> {
    match serde_json::from_str::<Value>(text) {
        Ok(v) => LimitSet::from_json(&v),
        Err(e) => Err(Error::schema(
            truncation_path(text).unwrap_or_default(),
            format!("malformed JSON: {e}"),
        )),
    }
}

/// For a truncated document, the first required top-level field that never
/// appears (or the last one that started, if all were started).
fn truncation_path(text: &str) -> Option<String> {
    const ORDER: [&str; 6] = [
        "version",
        "metadata",
        "bone_length",
        "curvature",
        "angular_distance",
        "angle_hulls",
    ];
    let started: Vec<&str> = ORDER
        .iter()
        .copied()
        .filter(|k| text.contains(&format!("\"{k}\"")))
        .collect();
    ORDER
        .iter()
        .find(|k| !started.contains(k))
        .or_else(|| started.last())
        .map(|k| k.to_string())
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Lower tail probability; intervals span the `[q, 1 - q]` quantiles.
    pub quantile: f64,
    /// Skip degenerate samples instead of failing.
    pub lenient: bool,
    pub source: String,
    pub length_unit: String,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            quantile: 0.0,
            lenient: false,
            source: "fit".into(),
            length_unit: "m".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub limits: LimitSet,
    /// Indices and reasons of samples skipped in lenient mode.
    pub skipped: Vec<(usize, String)>,
    /// Hulls that fell back to a thin enclosing rectangle because their
    /// samples were collinear or coincident.
    pub degenerate_hulls: Vec<usize>,
}

/// Quantities measured on one pose.
struct Measurement {
    lengths: [f64; NUM_BONES],
    curvature: [f64; NUM_PALM_GAPS],
    angular: [f64; NUM_PALM_GAPS],
    angles: [AnglePair; NUM_FINGER_BONES],
}

fn measure(pose: &HandPose) -> Result<Measurement> {
    let bones: BoneSet = BoneSet::from_joints(&pose.to_vec3());
    let palm = palm_descriptor(&bones)?;
    let fa = finger_angles(&bones, &palm, false)?;
    Ok(Measurement {
        lengths: bones.lengths(),
        curvature: palm.curvatures,
        angular: palm.angular_distances,
        angles: fa.angles,
    })
}

/// Linearly interpolated empirical quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

fn fit_interval(mut xs: Vec<f64>, q: f64) -> Result<Interval> {
    xs.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&xs, q);
    let hi = quantile_sorted(&xs, 1.0 - q);
    Interval::new(lo, hi.max(lo))
}

pub fn fit_limits(corpus: &[HandPose], quantile: f64) -> Result<LimitSet> {
    let options = FitOptions {
        quantile,
        ..FitOptions::default()
    };
    Ok(fit_limits_with(corpus, &options)?.limits)
}

pub fn fit_limits_with(corpus: &[HandPose], options: &FitOptions) -> Result<FitOutcome> {
    let q = options.quantile;
    if !(0.0..0.5).contains(&q) {
        return Err(Error::InvalidConfig(format!("quantile must lie in [0, 0.5), got {q}")));
    }
    let measured: Vec<Result<Measurement>> = corpus.par_iter().map(measure).collect();
    let mut samples = Vec::with_capacity(corpus.len());
    let mut skipped = Vec::new();
    for (index, m) in measured.into_iter().enumerate() {
        match m {
            Ok(m) => samples.push(m),
            Err(e) if options.lenient => skipped.push((index, e.to_string())),
            Err(e) => {
                return Err(Error::DegenerateSample {
                    index,
                    source: Box::new(e),
                })
            }
        }
    }
    if samples.len() < MIN_CORPUS {
        return Err(Error::InsufficientData {
            needed: MIN_CORPUS,
            got: samples.len(),
        });
    }

    let column = |f: &dyn Fn(&Measurement) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    let mut bone_length = [Interval::point(0.0); NUM_BONES];
    for (b, slot) in bone_length.iter_mut().enumerate() {
        *slot = fit_interval(column(&|m| m.lengths[b]), q)?;
    }
    let mut curvature = [Interval::point(0.0); NUM_PALM_GAPS];
    let mut angular_distance = [Interval::point(0.0); NUM_PALM_GAPS];
    for i in 0..NUM_PALM_GAPS {
        curvature[i] = fit_interval(column(&|m| m.curvature[i]), q)?;
        angular_distance[i] = fit_interval(column(&|m| m.angular[i]), q)?;
    }

    let fitted: Vec<(AngleHull, bool)> = (0..NUM_FINGER_BONES)
        .into_par_iter()
        .map(|k| {
            let points: Vec<AnglePair> = samples.iter().map(|m| m.angles[k]).collect();
            match build_hull(&points) {
                Ok(h) => Ok((h, false)),
                Err(Error::DegenerateDistribution { .. }) => {
                    let raw: Vec<[f64; 2]> = points.iter().map(AnglePair::as_array).collect();
                    Ok((AngleHull::enclosing(&raw, DEGENERATE_HULL_MARGIN)?, true))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let degenerate_hulls = (0..NUM_FINGER_BONES).filter(|&k| fitted[k].1).collect();
    let angle_hulls: Vec<AngleHull> = fitted.into_iter().map(|(h, _)| h).collect();

    Ok(FitOutcome {
        limits: LimitSet {
            bone_length,
            curvature,
            angular_distance,
            angle_hulls: angle_hulls.try_into().expect("fifteen hulls"),
            metadata: LimitMetadata {
                source: options.source.clone(),
                samples: samples.len(),
                length_unit: options.length_unit.clone(),
                quantile: q,
            },
        },
        skipped,
        degenerate_hulls,
    })
}
