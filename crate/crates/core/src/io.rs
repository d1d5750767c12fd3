//! File formats (JSON in, JSON/CSV out) at `f64` precision.
//!
//! Complex numbers are `[re, im]` pairs and mode indices are 0-based. JSON
//! floats are written with 17 significant digits so they round-trip exactly;
//! CSV uses 12.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::jmatrix::{JMatrix, DENSE_MAX};
use crate::matrix::CMatrix;
use crate::network::{NetworkMatrix, OccupationVector};
use crate::probability::Distribution;
use crate::spectral::{DetectorModel, FiniteRankState, GaussianState, MixedState, PureState, DEFAULT_QUADRATURE_NODES};
use crate::symgroup::CycleType;
use crate::zeroprob::{Group, GroupSpec, SuppressionRecord, Verdict};
use crate::{C64, CMatrix64};

/// `{"m": M, "rows": [[[re, im], ...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub m: usize,
    pub rows: Vec<Vec<[f64; 2]>>,
}

fn rows_of(m: &CMatrix64) -> Vec<Vec<[f64; 2]>> {
    let n = m.dim();
    (0..n).map(|i| (0..n).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn matrix_of(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix64> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::arg("matrix rows must form a square array"));
    }
    Ok(CMatrix::from_fn(n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

impl NetworkFile {
    pub fn from_network(u: &NetworkMatrix<f64>) -> Self {
        NetworkFile { m: u.modes(), rows: rows_of(u.matrix()) }
    }

    pub fn to_network(&self) -> Result<NetworkMatrix<f64>> {
        if self.rows.len() != self.m {
            return Err(Error::arg(format!("network file: m = {} but {} rows", self.m, self.rows.len())));
        }
        NetworkMatrix::from_user(matrix_of(&self.rows)?)
    }
}

/// Network source: `fourier:M`, `haar:M:SEED`, `identity:M`, or a network file.
pub fn load_network(source: &str) -> Result<NetworkMatrix<f64>> {
    let parts: Vec<&str> = source.split(':').collect();
    let num = |s: &str, what: &str| s.parse::<u64>().map_err(|_| Error::arg(format!("network: bad {what} {s:?}")));
    match parts.as_slice() {
        ["fourier", m] => NetworkMatrix::fourier(num(m, "mode count")? as usize),
        ["identity", m] => Ok(NetworkMatrix::identity(num(m, "mode count")? as usize)),
        ["haar", m, seed] => NetworkMatrix::random_unitary(num(m, "mode count")? as usize, num(seed, "seed")?),
        _ => read_json::<NetworkFile>(source)?.to_network(),
    }
}

/// Comma-separated occupation counts, e.g. `"1,1,0"`.
pub fn parse_occupation(s: &str) -> Result<OccupationVector> {
    let counts = s
        .split(',')
        .map(|c| c.trim().parse::<usize>().map_err(|_| Error::arg(format!("occupation: bad count {c:?} in {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(OccupationVector::new(counts))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianEntry {
    pub omega: f64,
    pub delta: f64,
    #[serde(default)]
    pub t: f64,
    #[serde(default)]
    pub pol: u8,
}

impl GaussianEntry {
    fn build(&self) -> Result<GaussianState<f64>> {
        GaussianState::new(self.omega, self.delta, self.t, self.pol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PureEntry {
    Gaussian(GaussianEntry),
    /// Coefficients in a fixed orthonormal basis.
    Coeffs(Vec<[f64; 2]>),
}

impl PureEntry {
    pub fn build(&self) -> Result<PureState<f64>> {
        Ok(match self {
            PureEntry::Gaussian(g) => PureState::Gaussian(g.build()?),
            PureEntry::Coeffs(c) => PureState::FiniteRank(FiniteRankState::new(c.iter().map(|c| C64::new(c[0], c[1])).collect())?),
        })
    }

    pub fn from_state(s: &PureState<f64>) -> Self {
        match s {
            PureState::Gaussian(g) => PureEntry::Gaussian(GaussianEntry { omega: g.omega, delta: g.delta, t: g.t, pol: g.pol }),
            PureState::FiniteRank(f) => PureEntry::Coeffs(f.coeffs().iter().map(|c| [c.re, c.im]).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterEntry {
    pub omega: f64,
    pub delta: f64,
    #[serde(default)]
    pub t: f64,
    /// Standard deviation of the arrival time.
    pub sd: f64,
    #[serde(default)]
    pub nodes: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedEntry {
    pub weight: f64,
    pub state: PureEntry,
}

/// One photon of a photon file. `gaussian` and `coeffs` are pure states;
/// `jitter` and `ensemble` are mixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PhotonEntry {
    Gaussian(GaussianEntry),
    Coeffs(Vec<[f64; 2]>),
    Jitter(JitterEntry),
    Ensemble(Vec<WeightedEntry>),
}

impl PhotonEntry {
    pub fn build(&self) -> Result<MixedState<f64>> {
        Ok(match self {
            PhotonEntry::Gaussian(g) => MixedState::Pure(PureEntry::Gaussian(g.clone()).build()?),
            PhotonEntry::Coeffs(c) => MixedState::Pure(PureEntry::Coeffs(c.clone()).build()?),
            PhotonEntry::Jitter(j) => MixedState::arrival_jitter(
                GaussianState::new(j.omega, j.delta, j.t, 0)?,
                j.sd,
                j.nodes.unwrap_or(DEFAULT_QUADRATURE_NODES),
            )?,
            PhotonEntry::Ensemble(cs) => {
                MixedState::ensemble(cs.iter().map(|c| Ok((c.weight, c.state.build()?))).collect::<Result<_>>()?)?
            }
        })
    }

    pub fn from_state(s: &PureState<f64>) -> Self {
        match PureEntry::from_state(s) {
            PureEntry::Gaussian(g) => PhotonEntry::Gaussian(g),
            PureEntry::Coeffs(c) => PhotonEntry::Coeffs(c),
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianEntry> {
        match self {
            PhotonEntry::Gaussian(g) => Some(g),
            _ => None,
        }
    }
}

pub fn load_photons(path: impl AsRef<Path>) -> Result<Vec<MixedState<f64>>> {
    read_json::<Vec<PhotonEntry>>(path)?.iter().map(PhotonEntry::build).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum DetectorEntry {
    Ideal,
    Flat { eta: f64 },
    GaussianBand { center: f64, width: f64, peak: f64 },
    /// Operator on the finite-rank coefficient space.
    Matrix { rows: Vec<Vec<[f64; 2]>> },
}

impl DetectorEntry {
    pub fn build(&self) -> Result<DetectorModel<f64>> {
        match self {
            DetectorEntry::Ideal => Ok(DetectorModel::Ideal),
            DetectorEntry::Flat { eta } => DetectorModel::flat(*eta),
            DetectorEntry::GaussianBand { center, width, peak } => DetectorModel::gaussian_band(*center, *width, *peak),
            DetectorEntry::Matrix { rows } => DetectorModel::operator(matrix_of(rows)?),
        }
    }
}

pub fn load_detectors(path: impl AsRef<Path>) -> Result<Vec<DetectorModel<f64>>> {
    read_json::<Vec<DetectorEntry>>(path)?.iter().map(DetectorEntry::build).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub state: PureEntry,
    pub modes: Vec<usize>,
}

/// `{"groups": [{"state": <pure photon entry>, "modes": [...]}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupFile {
    pub groups: Vec<GroupEntry>,
}

impl GroupFile {
    pub fn build(&self, modes: usize) -> Result<GroupSpec<f64>> {
        let groups = self
            .groups
            .iter()
            .map(|g| Ok(Group { state: g.state.build()?, modes: g.modes.clone() }))
            .collect::<Result<_>>()?;
        GroupSpec::new(modes, groups)
    }
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<D> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::arg(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::arg(format!("{}: {e}", path.display())))
}

/// Pretty JSON with floats printed to 17 significant digits.
struct Precise<'a>(PrettyFormatter<'a>);

impl Formatter for Precise<'_> {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Precise(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// `%.12g`-style formatting for CSV cells.
pub fn csv_float(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let sci = format!("{x:.11e}");
    // Rounding may bump the exponent (9.99…e2 → 1.00e3); read it back from the text.
    let exp = sci.rsplit('e').next().and_then(|e| e.parse::<i32>().ok()).unwrap_or(exp);
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let (mant, e) = sci.split_once('e').expect("scientific format");
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{mant}e{e}")
    }
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let mut f = fs::File::create(path.as_ref())?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub m: Vec<usize>,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionFile {
    pub input: Vec<usize>,
    pub outputs: Vec<OutputEntry>,
    pub sum: f64,
    pub engine: String,
}

impl DistributionFile {
    pub fn from_distribution(d: &Distribution<f64>) -> Self {
        DistributionFile {
            input: d.input.counts().to_vec(),
            outputs: d.outputs.iter().map(|r| OutputEntry { m: r.output.counts().to_vec(), p: r.p }).collect(),
            sum: d.sum,
            engine: d.engine.name().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CycleEntry {
    pub cycle_type: Vec<usize>,
    pub value: [f64; 2],
}

/// `J` in canonical (lexicographic) permutation order, row-major. Dense
/// entries are omitted above the dense-storage cap; cycle-compressed matrices
/// also list one value per cycle type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JDump {
    pub n: usize,
    pub order: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_compressed: Option<Vec<CycleEntry>>,
}

impl JDump {
    pub fn from_jmatrix(j: &JMatrix<f64>) -> Result<Self> {
        let entries = if j.photons() <= DENSE_MAX {
            let m = j.to_matrix()?;
            let d = m.dim();
            Some((0..d * d).map(|k| [m[(k / d, k % d)].re, m[(k / d, k % d)].im]).collect())
        } else {
            None
        };
        let cycle_compressed = j.cycle_values().map(|table| {
            CycleType::all(j.photons())
                .into_iter()
                .map(|ct| {
                    let v = table[&ct];
                    CycleEntry { cycle_type: ct.counts().to_vec(), value: [v.re, v.im] }
                })
                .collect()
        });
        Ok(JDump { n: j.photons(), order: "lex".into(), entries, cycle_compressed })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingEntry {
    /// Synthetic overlap, or `null` for the given states.
    pub overlap: Option<f64>,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecordEntry {
    pub m: Vec<usize>,
    pub max_amplitude: f64,
    pub classical: f64,
    pub settings: Vec<SettingEntry>,
    pub verdict: Verdict,
}

impl RecordEntry {
    pub fn from_record(r: &SuppressionRecord<f64>) -> Self {
        RecordEntry {
            m: r.output.counts().to_vec(),
            max_amplitude: r.max_amplitude,
            classical: r.classical,
            settings: r.settings.iter().map(|s| SettingEntry { overlap: s.overlap, p: s.p }).collect(),
            verdict: r.verdict,
        }
    }
}
