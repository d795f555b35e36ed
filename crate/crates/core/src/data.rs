//! Dataset ingestion, min-max normalization and synthetic benchmark generators.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `N x d` matrix of finite points with optional ground-truth labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    points: Array2<f64>,
    labels: Option<Vec<usize>>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(points: Array2<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        let (n, d) = points.dim();
        if n == 0 || d == 0 {
            return Err(Error::EmptyDataset);
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(pos));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::LengthMismatch(labels.len(), n));
            }
        }
        Ok(Self {
            points,
            labels,
            feature_names: None,
        })
    }

    /// Builds a dataset from row vectors. All rows must have the same length.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<usize>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let d = rows[0].len();
        let mut flat = Vec::with_capacity(n * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::LengthMismatch(row.len(), d));
            }
            flat.extend_from_slice(row);
        }
        let points = Array2::from_shape_vec((n, d), flat).expect("shape checked above");
        Self::new(points, labels)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dims() {
            return Err(Error::LengthMismatch(names.len(), self.dims()));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dims(&self) -> usize {
        self.points.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }
}

/// Selects the label column either by header name or by 0-based index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(idx) => ColumnRef::Index(idx),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HeaderMode {
    /// Treat the first row as a header when any of its cells is not numeric.
    #[default]
    Auto,
    Present,
    Absent,
}

pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: Option<&ColumnRef>,
    header: HeaderMode,
) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, label_column, header)
}

/// Reads a comma-delimited table. Row and column numbers in parse errors are 1-based
/// and count the header line when there is one.
pub fn read_csv<R: Read>(
    reader: R,
    label_column: Option<&ColumnRef>,
    header: HeaderMode,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() == 1 && rec.get(0).is_some_and(str::is_empty) {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let width = records[0].len();
    let has_header = match header {
        HeaderMode::Present => true,
        HeaderMode::Absent => false,
        HeaderMode::Auto => records[0].iter().any(|c| c.parse::<f64>().is_err()),
    };
    let names: Option<Vec<String>> =
        has_header.then(|| records[0].iter().map(str::to_string).collect());

    let label_idx = match label_column {
        None => None,
        Some(ColumnRef::Index(i)) if *i < width => Some(*i),
        Some(ColumnRef::Index(i)) => {
            return Err(Error::InvalidConfig(format!(
                "label column {i} out of range for {width} columns"
            )))
        }
        Some(ColumnRef::Name(name)) => {
            let names = names.as_ref().ok_or_else(|| {
                Error::InvalidConfig(format!("label column '{name}' requires a header row"))
            })?;
            Some(names.iter().position(|n| n == name).ok_or_else(|| {
                Error::InvalidConfig(format!("no column named '{name}'"))
            })?)
        }
    };

    let d = width - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(Error::EmptyDataset);
    }
    let first = usize::from(has_header);
    let mut flat = Vec::with_capacity((records.len() - first) * d);
    let mut raw_labels = Vec::new();
    for (offset, rec) in records.iter().enumerate().skip(first) {
        let row = offset + 1;
        if rec.len() != width {
            return Err(Error::Parse {
                row,
                column: rec.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        for (col, cell) in rec.iter().enumerate() {
            if Some(col) == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: col + 1,
                message: format!("'{cell}' is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: col + 1,
                    message: format!("'{cell}' is not finite"),
                });
            }
            flat.push(value);
        }
    }
    let n = flat.len() / d;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let points = Array2::from_shape_vec((n, d), flat).expect("row widths checked");
    let labels = label_idx.map(|_| encode_labels(&raw_labels));
    let mut ds = Dataset::new(points, labels)?;
    if let Some(names) = names {
        let features = names
            .into_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, n)| n)
            .collect();
        ds = ds.with_feature_names(features)?;
    }
    Ok(ds)
}

/// Non-negative integer labels are kept as-is; anything else is mapped to dense ids
/// in order of first appearance.
fn encode_labels(raw: &[String]) -> Vec<usize> {
    let numeric: Option<Vec<usize>> = raw
        .iter()
        .map(|s| {
            s.parse::<usize>().ok().or_else(|| {
                let v: f64 = s.parse().ok()?;
                (v >= 0.0 && v.fract() == 0.0 && v < 1e15).then_some(v as usize)
            })
        })
        .collect();
    if let Some(ids) = numeric {
        return ids;
    }
    let mut seen: Vec<&str> = Vec::new();
    raw.iter()
        .map(|s| match seen.iter().position(|x| *x == s.as_str()) {
            Some(i) => i,
            None => {
                seen.push(s);
                seen.len() - 1
            }
        })
        .collect()
}

/// Writes the dataset with a header row; labels, when present, go in a final `label` column.
pub fn write_csv<W: Write>(ds: &Dataset, mut out: W) -> Result<()> {
    let mut line = String::new();
    let header: Vec<String> = match ds.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..ds.dims()).map(|j| format!("x{j}")).collect(),
    };
    line.push_str(&header.join(","));
    if ds.labels().is_some() {
        line.push_str(",label");
    }
    writeln!(out, "{line}")?;
    for (i, row) in ds.points().rows().into_iter().enumerate() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            write!(line, "{v}").expect("writing to a String");
        }
        if let Some(labels) = ds.labels() {
            write!(line, ",{}", labels[i]).expect("writing to a String");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv(ds, file)
}

/// Maps every feature to `[0, 1]`. Constant features map to 0.
pub fn minmax_normalize(ds: &Dataset) -> Dataset {
    let mut points = ds.points.clone();
    for mut col in points.axis_iter_mut(Axis(1)) {
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let range = hi - lo;
        if range > 0.0 {
            col.mapv_inplace(|v| ((v - lo) / range).clamp(0.0, 1.0));
        } else {
            col.fill(0.0);
        }
    }
    Dataset {
        points,
        labels: ds.labels.clone(),
        feature_names: ds.feature_names.clone(),
    }
}

/// Smallest synthetic dataset accepted: four subclusters of the default minimum size.
pub const MIN_SYNTHETIC_POINTS: usize = 4 * 25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Shape {
    /// Isotropic Gaussian blobs, one per center.
    Blobs { centers: Vec<Vec<f64>>, std: f64 },
    /// Concentric circles around the origin with Gaussian radial noise.
    Rings { radii: Vec<f64>, noise: f64 },
    /// Two interleaving half circles.
    Moons { noise: f64 },
    /// A large ring enclosing five interior structures; see [`ring_with_structures`].
    RingWithStructures { noise: f64 },
}

impl Shape {
    pub fn components(&self) -> usize {
        match self {
            Shape::Blobs { centers, .. } => centers.len(),
            Shape::Rings { radii, .. } => radii.len(),
            Shape::Moons { .. } => 2,
            Shape::RingWithStructures { .. } => RING_WITH_STRUCTURES_PARTS.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub shape: Shape,
    pub n_points: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n_points < MIN_SYNTHETIC_POINTS {
            return Err(Error::InvalidSpec(format!(
                "n_points must be at least {MIN_SYNTHETIC_POINTS}, got {}",
                self.n_points
            )));
        }
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be finite and >= 0")))
            }
        };
        match &self.shape {
            Shape::Blobs { centers, std } => {
                if centers.is_empty() {
                    return Err(Error::InvalidSpec("blobs need at least one center".into()));
                }
                let d = centers[0].len();
                if d == 0 || centers.iter().any(|c| c.len() != d) {
                    return Err(Error::InvalidSpec(
                        "blob centers must share a positive dimension".into(),
                    ));
                }
                if centers.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSpec("blob centers must be finite".into()));
                }
                nonneg("std", *std)?;
            }
            Shape::Rings { radii, noise } => {
                if radii.is_empty() || radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
                    return Err(Error::InvalidSpec("ring radii must be positive".into()));
                }
                nonneg("noise", *noise)?;
            }
            Shape::Moons { noise } | Shape::RingWithStructures { noise } => {
                nonneg("noise", *noise)?
            }
        }
        Ok(())
    }
}

/// Splits `n` into `parts` near-equal counts; the first `n % parts` get one extra.
fn split_even(n: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|i| n / parts + usize::from(i < n % parts))
        .collect()
}

pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(spec.n_points);
    let mut labels = Vec::with_capacity(spec.n_points);

    match &spec.shape {
        Shape::Blobs { centers, std } => {
            let normal = Normal::new(0.0, *std).expect("std validated");
            for (label, (center, count)) in centers
                .iter()
                .zip(split_even(spec.n_points, centers.len()))
                .enumerate()
            {
                for _ in 0..count {
                    rows.push(center.iter().map(|c| c + normal.sample(&mut rng)).collect());
                    labels.push(label);
                }
            }
        }
        Shape::Rings { radii, noise } => {
            let normal = Normal::new(0.0, *noise).expect("noise validated");
            for (label, (&radius, count)) in radii
                .iter()
                .zip(split_even(spec.n_points, radii.len()))
                .enumerate()
            {
                for _ in 0..count {
                    let angle = rng.random_range(0.0..std::f64::consts::TAU);
                    let r = radius + normal.sample(&mut rng);
                    rows.push(vec![r * angle.cos(), r * angle.sin()]);
                    labels.push(label);
                }
            }
        }
        Shape::Moons { noise } => {
            let normal = Normal::new(0.0, *noise).expect("noise validated");
            for (label, count) in split_even(spec.n_points, 2).into_iter().enumerate() {
                for _ in 0..count {
                    let t = rng.random_range(0.0..std::f64::consts::PI);
                    let (x, y) = if label == 0 {
                        (t.cos(), t.sin())
                    } else {
                        (1.0 - t.cos(), 0.5 - t.sin())
                    };
                    rows.push(vec![x + normal.sample(&mut rng), y + normal.sample(&mut rng)]);
                    labels.push(label);
                }
            }
        }
        Shape::RingWithStructures { noise } => {
            let normal = Normal::new(0.0, *noise).expect("noise validated");
            let counts = ring_with_structures_counts(spec.n_points);
            for (label, (part, count)) in RING_WITH_STRUCTURES_PARTS
                .iter()
                .zip(counts)
                .enumerate()
            {
                for _ in 0..count {
                    let [x, y] = part.sample(&mut rng);
                    rows.push(vec![x + normal.sample(&mut rng), y + normal.sample(&mut rng)]);
                    labels.push(label);
                }
            }
        }
    }
    Dataset::from_rows(&rows, Some(labels))
}

/// One generating component of the `ring_with_structures` layout.
#[derive(Clone, Copy, Debug)]
enum Part {
    /// Area-uniform annular sector: center, inner/outer radius, start/end angle (degrees).
    Annulus {
        center: [f64; 2],
        radii: [f64; 2],
        degrees: [f64; 2],
    },
    Gaussian { center: [f64; 2], std: f64 },
    /// Axis-aligned uniform rectangle `[x0, x1] x [y0, y1]`.
    Rect { x: [f64; 2], y: [f64; 2] },
}

impl Part {
    fn sample<R: Rng>(&self, rng: &mut R) -> [f64; 2] {
        match *self {
            Part::Annulus {
                center,
                radii,
                degrees,
            } => {
                let t = rng.random_range(degrees[0]..degrees[1]).to_radians();
                let r = rng.random_range(radii[0] * radii[0]..radii[1] * radii[1]).sqrt();
                [center[0] + r * t.cos(), center[1] + r * t.sin()]
            }
            Part::Gaussian { center, std } => {
                let normal = Normal::new(0.0, std).expect("positive std");
                [
                    center[0] + normal.sample(rng),
                    center[1] + normal.sample(rng),
                ]
            }
            Part::Rect { x, y } => [rng.random_range(x[0]..x[1]), rng.random_range(y[0]..y[1])],
        }
    }
}

/// The `ring_with_structures` layout, in label order:
///
/// | label | structure | geometry |
/// |-------|-----------|----------|
/// | 0 | enclosing ring | annulus at origin, radii 9.5..10.5 |
/// | 1 | Gaussian blob | center (-4, 3.8), std 0.6 |
/// | 2 | elongated bar | rectangle [-0.5, 5.5] x [3.5, 4.5] |
/// | 3 | arc | annular sector at (0, 0.5), radii 3.0..3.7, 215..325 degrees |
/// | 4 | Gaussian blob | center (5.4, -3.6), std 0.55 |
/// | 5 | thick small ring | annulus at (-5.4, -3.4), radii 0.6..1.5 |
///
/// The enclosing ring receives 30% of the points, the interior structures share the
/// rest equally. Nearest points of distinct structures are roughly 1.5 units apart.
const RING_WITH_STRUCTURES_PARTS: [Part; 6] = [
    Part::Annulus {
        center: [0.0, 0.0],
        radii: [9.5, 10.5],
        degrees: [0.0, 360.0],
    },
    Part::Gaussian {
        center: [-4.0, 3.8],
        std: 0.6,
    },
    Part::Rect {
        x: [-0.5, 5.5],
        y: [3.5, 4.5],
    },
    Part::Annulus {
        center: [0.0, 0.5],
        radii: [3.0, 3.7],
        degrees: [215.0, 325.0],
    },
    Part::Gaussian {
        center: [5.4, -3.6],
        std: 0.55,
    },
    Part::Annulus {
        center: [-5.4, -3.4],
        radii: [0.6, 1.5],
        degrees: [0.0, 360.0],
    },
];

fn ring_with_structures_counts(n: usize) -> Vec<usize> {
    let ring = n * 3 / 10;
    let mut counts = vec![ring];
    counts.extend(split_even(n - ring, RING_WITH_STRUCTURES_PARTS.len() - 1));
    counts
}
