//! Sequence datasets: collections of observation sequences with optional
//! state and input labels, plus the on-disk layout (a JSON header next to
//! flat CSV bodies).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::SeqView;

/// Observation storage: continuous vectors or discrete symbols.
#[derive(Debug, Clone, PartialEq)]
pub enum ObsData {
    /// `obs[n][t]` is the D-dimensional observation of sequence `n` at step `t`.
    Continuous(Vec<Vec<Vec<f64>>>),
    /// `obs[n][t]` is a symbol index.
    Symbolic(Vec<Vec<usize>>),
}

/// Record of how a dataset was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub label: String,
    pub seed: u64,
    /// Serialized generating network template, when one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<serde_json::Value>,
}

/// A set of `N` observation sequences with optional per-step state labels
/// and per-step input labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    obs: ObsData,
    /// `states[n][t]`, when ground-truth labels are known.
    states: Option<Vec<Vec<usize>>>,
    /// `inputs[n][t][u]` = value of input `u`, when inputs were observed.
    inputs: Option<Vec<Vec<Vec<usize>>>>,
    /// Symbol alphabet size for symbolic observations.
    alphabet: Option<usize>,
    provenance: Option<Provenance>,
}

impl SequenceDataset {
    pub fn continuous(obs: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if obs.is_empty() || obs.iter().any(|seq| seq.is_empty()) {
            return Err(Error::invalid("dataset must contain nonempty sequences"));
        }
        let dim = obs[0][0].len();
        if dim == 0 {
            return Err(Error::invalid(
                "observations must have at least one dimension",
            ));
        }
        for seq in &obs {
            if seq.iter().any(|x| x.len() != dim) {
                return Err(Error::invalid("observation dimensions are inconsistent"));
            }
        }
        Ok(Self {
            obs: ObsData::Continuous(obs),
            states: None,
            inputs: None,
            alphabet: None,
            provenance: None,
        })
    }

    pub fn symbolic(obs: Vec<Vec<usize>>, alphabet: usize) -> Result<Self> {
        if obs.is_empty() || obs.iter().any(|seq| seq.is_empty()) {
            return Err(Error::invalid("dataset must contain nonempty sequences"));
        }
        if alphabet == 0 {
            return Err(Error::invalid("alphabet size must be at least 1"));
        }
        if obs.iter().flatten().any(|&s| s >= alphabet) {
            return Err(Error::invalid("symbol outside declared alphabet"));
        }
        Ok(Self {
            obs: ObsData::Symbolic(obs),
            states: None,
            inputs: None,
            alphabet: Some(alphabet),
            provenance: None,
        })
    }

    pub fn with_states(mut self, states: Vec<Vec<usize>>) -> Result<Self> {
        if states.len() != self.num_sequences()
            || states
                .iter()
                .enumerate()
                .any(|(n, s)| s.len() != self.seq_len(n))
        {
            return Err(Error::invalid("state labels do not match dataset shape"));
        }
        self.states = Some(states);
        Ok(self)
    }

    pub fn with_inputs(mut self, inputs: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if inputs.len() != self.num_sequences()
            || inputs
                .iter()
                .enumerate()
                .any(|(n, s)| s.len() != self.seq_len(n))
        {
            return Err(Error::invalid("input labels do not match dataset shape"));
        }
        self.inputs = Some(inputs);
        Ok(self)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn obs(&self) -> &ObsData {
        &self.obs
    }

    pub fn num_sequences(&self) -> usize {
        match &self.obs {
            ObsData::Continuous(o) => o.len(),
            ObsData::Symbolic(o) => o.len(),
        }
    }

    pub fn seq_len(&self, n: usize) -> usize {
        match &self.obs {
            ObsData::Continuous(o) => o[n].len(),
            ObsData::Symbolic(o) => o[n].len(),
        }
    }

    /// Total number of observations across all sequences.
    pub fn total_len(&self) -> usize {
        (0..self.num_sequences()).map(|n| self.seq_len(n)).sum()
    }

    /// Common sequence length, if every sequence has the same one.
    pub fn uniform_len(&self) -> Option<usize> {
        let t = self.seq_len(0);
        (1..self.num_sequences())
            .all(|n| self.seq_len(n) == t)
            .then_some(t)
    }

    /// Observation dimension for continuous data.
    pub fn dim(&self) -> Option<usize> {
        match &self.obs {
            ObsData::Continuous(o) => Some(o[0][0].len()),
            ObsData::Symbolic(_) => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.obs, ObsData::Continuous(_))
    }

    pub fn alphabet(&self) -> Option<usize> {
        self.alphabet
    }

    pub fn states(&self) -> Option<&Vec<Vec<usize>>> {
        self.states.as_ref()
    }

    pub fn inputs(&self) -> Option<&Vec<Vec<Vec<usize>>>> {
        self.inputs.as_ref()
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn seq_view(&self, n: usize) -> SeqView<'_> {
        match &self.obs {
            ObsData::Continuous(o) => SeqView::Vectors(&o[n]),
            ObsData::Symbolic(o) => SeqView::Symbols(&o[n]),
        }
    }

    /// Number of distinct state labels (max label + 1), when labels exist.
    pub fn num_state_labels(&self) -> Option<usize> {
        self.states
            .as_ref()
            .map(|s| s.iter().flatten().max().map_or(0, |&m| m + 1))
    }

    /// New dataset restricted to the selected sequence indices, labels included.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.iter().any(|&n| n >= self.num_sequences()) {
            return Err(Error::invalid("subset index out of range"));
        }
        if indices.is_empty() {
            return Err(Error::invalid("subset must select at least one sequence"));
        }
        let obs = match &self.obs {
            ObsData::Continuous(o) => {
                ObsData::Continuous(indices.iter().map(|&n| o[n].clone()).collect())
            }
            ObsData::Symbolic(o) => {
                ObsData::Symbolic(indices.iter().map(|&n| o[n].clone()).collect())
            }
        };
        Ok(Self {
            obs,
            states: self
                .states
                .as_ref()
                .map(|s| indices.iter().map(|&n| s[n].clone()).collect()),
            inputs: self
                .inputs
                .as_ref()
                .map(|s| indices.iter().map(|&n| s[n].clone()).collect()),
            alphabet: self.alphabet,
            provenance: self.provenance.clone(),
        })
    }

    /// Dataset with the same labels and provenance but symbolic
    /// observations, e.g. after quantizing a continuous dataset.
    pub fn to_symbolic(&self, symbols: Vec<Vec<usize>>, alphabet: usize) -> Result<Self> {
        let mut out = SequenceDataset::symbolic(symbols, alphabet)?;
        if out.num_sequences() != self.num_sequences()
            || (0..out.num_sequences()).any(|n| out.seq_len(n) != self.seq_len(n))
        {
            return Err(Error::invalid(
                "symbolized data does not match dataset shape",
            ));
        }
        out.states = self.states.clone();
        out.inputs = self.inputs.clone();
        out.provenance = self.provenance.clone();
        Ok(out)
    }

    /// All observation vectors pooled over sequences and time, in (n, t) order.
    pub fn pooled_points(&self) -> Result<Vec<Vec<f64>>> {
        match &self.obs {
            ObsData::Continuous(o) => Ok(o.iter().flatten().cloned().collect()),
            ObsData::Symbolic(_) => {
                Err(Error::invalid("operation requires continuous observations"))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// On-disk layout
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    kind: String,
    n: usize,
    t: usize,
    d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ns: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alphabet: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_inputs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

/// Format a float with 17 significant digits, enough to round-trip f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

impl SequenceDataset {
    /// Write the dataset under `dir` as `header.json`, `observations.csv`
    /// (or `symbols.csv`), and optional `states.csv` / `inputs.csv`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let header = DatasetHeader {
            kind: if self.is_continuous() {
                "continuous"
            } else {
                "symbolic"
            }
            .to_string(),
            n: self.num_sequences(),
            t: self.seq_len(0),
            d: self.dim().unwrap_or(1),
            ns: self.num_state_labels(),
            alphabet: self.alphabet,
            num_inputs: self.inputs.as_ref().map(|i| i[0][0].len()),
            provenance: self.provenance.clone(),
        };
        let header_path = dir.join("header.json");
        let mut file = fs::File::create(&header_path).map_err(|e| Error::io(&header_path, e))?;
        serde_json::to_writer_pretty(&mut file, &header)
            .map_err(|e| Error::parse(&header_path, e.to_string()))?;
        file.write_all(b"\n")
            .map_err(|e| Error::io(&header_path, e))?;

        match &self.obs {
            ObsData::Continuous(obs) => {
                let path = dir.join("observations.csv");
                let mut w = csv_writer(&path)?;
                let d = self.dim().unwrap();
                let mut head = vec!["seq".to_string(), "t".to_string()];
                head.extend((0..d).map(|i| format!("dim{i}")));
                w.write_record(&head)
                    .map_err(|e| Error::parse(&path, e.to_string()))?;
                for (n, seq) in obs.iter().enumerate() {
                    for (t, x) in seq.iter().enumerate() {
                        let mut rec = vec![n.to_string(), t.to_string()];
                        rec.extend(x.iter().map(|&v| format_f64(v)));
                        w.write_record(&rec)
                            .map_err(|e| Error::parse(&path, e.to_string()))?;
                    }
                }
                w.flush().map_err(|e| Error::io(&path, e))?;
            }
            ObsData::Symbolic(obs) => {
                let path = dir.join("symbols.csv");
                let mut w = csv_writer(&path)?;
                w.write_record(["seq", "t", "symbol"])
                    .map_err(|e| Error::parse(&path, e.to_string()))?;
                for (n, seq) in obs.iter().enumerate() {
                    for (t, s) in seq.iter().enumerate() {
                        w.write_record(&[n.to_string(), t.to_string(), s.to_string()])
                            .map_err(|e| Error::parse(&path, e.to_string()))?;
                    }
                }
                w.flush().map_err(|e| Error::io(&path, e))?;
            }
        }

        if let Some(states) = &self.states {
            let path = dir.join("states.csv");
            let mut w = csv_writer(&path)?;
            w.write_record(["seq", "t", "state"])
                .map_err(|e| Error::parse(&path, e.to_string()))?;
            for (n, seq) in states.iter().enumerate() {
                for (t, s) in seq.iter().enumerate() {
                    w.write_record(&[n.to_string(), t.to_string(), s.to_string()])
                        .map_err(|e| Error::parse(&path, e.to_string()))?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }

        if let Some(inputs) = &self.inputs {
            let path = dir.join("inputs.csv");
            let mut w = csv_writer(&path)?;
            let u = inputs[0][0].len();
            let mut head = vec!["seq".to_string(), "t".to_string()];
            head.extend((0..u).map(|i| format!("input{i}")));
            w.write_record(&head)
                .map_err(|e| Error::parse(&path, e.to_string()))?;
            for (n, seq) in inputs.iter().enumerate() {
                for (t, vals) in seq.iter().enumerate() {
                    let mut rec = vec![n.to_string(), t.to_string()];
                    rec.extend(vals.iter().map(|v| v.to_string()));
                    w.write_record(&rec)
                        .map_err(|e| Error::parse(&path, e.to_string()))?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Read a dataset previously written with [`SequenceDataset::write_dir`].
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let header_path = dir.join("header.json");
        let text = fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
        let header: DatasetHeader =
            serde_json::from_str(&text).map_err(|e| Error::parse(&header_path, e.to_string()))?;

        let parse_cell = |path: &PathBuf, s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|e| Error::parse(path.clone(), format!("bad integer {s:?}: {e}")))
        };

        let mut dataset = if header.kind == "continuous" {
            let path = dir.join("observations.csv");
            let mut obs: Vec<Vec<Vec<f64>>> = vec![Vec::new(); header.n];
            let mut rdr = csv_reader(&path)?;
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::parse(&path, e.to_string()))?;
                let n = parse_cell(&path, &rec[0])?;
                if n >= header.n {
                    return Err(Error::parse(
                        &path,
                        format!("sequence index {n} out of range"),
                    ));
                }
                let x: Vec<f64> = (2..rec.len())
                    .map(|i| {
                        rec[i].parse::<f64>().map_err(|e| {
                            Error::parse(&path, format!("bad float {:?}: {e}", &rec[i]))
                        })
                    })
                    .collect::<Result<_>>()?;
                obs[n].push(x);
            }
            SequenceDataset::continuous(obs)?
        } else {
            let path = dir.join("symbols.csv");
            let mut obs: Vec<Vec<usize>> = vec![Vec::new(); header.n];
            let mut rdr = csv_reader(&path)?;
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::parse(&path, e.to_string()))?;
                let n = parse_cell(&path, &rec[0])?;
                if n >= header.n {
                    return Err(Error::parse(
                        &path,
                        format!("sequence index {n} out of range"),
                    ));
                }
                obs[n].push(parse_cell(&path, &rec[2])?);
            }
            let alphabet = header
                .alphabet
                .unwrap_or_else(|| obs.iter().flatten().max().map_or(1, |&m| m + 1));
            SequenceDataset::symbolic(obs, alphabet)?
        };

        let states_path = dir.join("states.csv");
        if states_path.exists() {
            let mut states: Vec<Vec<usize>> = vec![Vec::new(); header.n];
            let mut rdr = csv_reader(&states_path)?;
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::parse(&states_path, e.to_string()))?;
                let n = parse_cell(&states_path, &rec[0])?;
                states[n].push(parse_cell(&states_path, &rec[2])?);
            }
            dataset = dataset.with_states(states)?;
        }

        let inputs_path = dir.join("inputs.csv");
        if inputs_path.exists() {
            let mut inputs: Vec<Vec<Vec<usize>>> = vec![Vec::new(); header.n];
            let mut rdr = csv_reader(&inputs_path)?;
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::parse(&inputs_path, e.to_string()))?;
                let n = parse_cell(&inputs_path, &rec[0])?;
                let vals: Vec<usize> = (2..rec.len())
                    .map(|i| parse_cell(&inputs_path, &rec[i]))
                    .collect::<Result<_>>()?;
                inputs[n].push(vals);
            }
            dataset = dataset.with_inputs(inputs)?;
        }

        if let Some(p) = header.provenance {
            dataset = dataset.with_provenance(p);
        }
        Ok(dataset)
    }
}
