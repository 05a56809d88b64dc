//! Learning and recognition runs where every rule firing of the CHAM
//! program executes the stage bound to it.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    argmax, derive_seed, expert_votes, expert_weights, stage_cc, stage_dl, stage_el, stage_il,
    stage_rl, stage_sc, DlModel, Expectation, FeedbackBundle, IlConfig, IlObservation, MediaSample,
    Matrix, MemoryHistory, RlConfig, Scalar, ScConfig, SemanticDecision, SparseMap, StageError,
};
use crate::engine::{run, RunConfig, SchedulerPolicy, Trace};
use crate::model::{reacted_solution, CnccFramework};
use crate::term::{DataKind, DataSymbol};
use DataSymbol::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineConfig {
    pub classes: usize,
    pub samples: usize,
    pub noise: f64,
    pub iterations: usize,
    pub sparsity: f64,
    pub window: usize,
    pub hidden: usize,
    pub readout_scale: f64,
    pub eta: f64,
    pub lambda_s: f64,
    pub lambda_i: f64,
    pub force_zero_ei: bool,
    #[serde(serialize_with = "ser_scheduler")]
    pub scheduler: SchedulerPolicy,
}

fn ser_scheduler<S: serde::Serializer>(p: &SchedulerPolicy, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(p.name())
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            classes: 2,
            samples: 200,
            noise: 0.1,
            iterations: 5,
            sparsity: 0.25,
            window: 3,
            hidden: 64,
            readout_scale: 0.1,
            eta: 1.0,
            lambda_s: 0.5,
            lambda_i: 1.0,
            force_zero_ei: false,
            scheduler: SchedulerPolicy::Lexicographic,
        }
    }
}

impl PipelineConfig {
    fn sc(&self) -> ScConfig {
        ScConfig {
            sparsity: self.sparsity,
            window: self.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    /// Mean reinforcement error over the training split.
    pub error: f64,
    pub ei: f64,
    pub es: f64,
    /// Increment groups zeroed by the acceptance check.
    pub rejected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Accuracy {
    pub ensemble: f64,
    pub temporal: f64,
    pub spatial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub learning: Vec<Vec<String>>,
    pub recognition: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineMetrics {
    pub config: PipelineConfig,
    pub seed: u64,
    pub iterations: Vec<IterationMetrics>,
    pub accuracy: Accuracy,
    pub trace: TraceSummary,
}

impl PipelineMetrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn errors(&self) -> Vec<f64> {
        self.iterations.iter().map(|i| i.error).collect()
    }
}

/// Symbols each rule's stage reads and writes.
pub const BINDINGS: [(&str, &[DataSymbol], &[DataSymbol]); 6] = [
    ("TS_SC", &[Mi, Mn, Es], &[Sa, Sv]),
    ("TS_DL", &[Sa, Ma, Sv, Mv], &[Fa, Fv]),
    ("TS_CC", &[Fa, Mt, Fv, Ms], &[Ct, Cs]),
    ("TS_EL", &[Ct, Cs, Fa, Fv], &[Cp]),
    ("TS_RL", &[Cp], &[Ei, Es]),
    ("TS_IL", &[Ei, Cp], &[Mp, Ma, Mv, Mt, Ms, Mn]),
];

/// Kind of the value the pipeline stores for a symbol.
fn payload_kind(s: DataSymbol) -> Option<DataKind> {
    Some(match s {
        Mi | Sa | Sv | Fa | Fv | Ma | Mv => DataKind::Matrix,
        Ct | Cs | Mt | Ms | Mp | Mn => DataKind::Vector,
        Es | Ei => DataKind::Parameter,
        Cp => DataKind::Set,
        Eh => return None,
    })
}

/// Every rule of both programs has a binding whose symbols match the
/// stage contract, and stored values have their declared kinds.
pub fn check_bindings(fw: &CnccFramework) -> Result<(), StageError> {
    let bound: BTreeMap<&str, _> = BINDINGS.iter().map(|(r, i, o)| (*r, (*i, *o))).collect();
    for rule in fw.learning.rules.iter().chain(&fw.recognition.rules) {
        let (inputs, outputs) = bound
            .get(rule.name())
            .ok_or_else(|| StageError::Binding(format!("no stage bound to {}", rule.name())))?;
        let sig = fw
            .stage_signatures
            .get(rule.name())
            .ok_or_else(|| StageError::Binding(format!("no contract for {}", rule.name())))?;
        let same = |a: &[DataSymbol], b: &std::collections::BTreeSet<DataSymbol>| {
            a.len() == b.len() && a.iter().all(|s| b.contains(s))
        };
        if !same(inputs, &sig.inputs) || !same(outputs, &sig.outputs) {
            return Err(StageError::Binding(format!("{} does not match its contract", rule.name())));
        }
        for s in inputs.iter().chain(outputs.iter()) {
            let declared = fw.token_types.get(s).copied();
            if payload_kind(*s) != declared {
                return Err(StageError::Binding(format!("{} carries a value of the wrong kind", s.name())));
            }
        }
    }
    Ok(())
}

/// Feedback accumulated across iterations; the neutral start is all zeros.
#[derive(Debug, Clone, PartialEq)]
struct Feedback<T> {
    es: T,
    ma: Matrix<T>,
    mv: Matrix<T>,
    mt: Vec<T>,
    ms: Vec<T>,
    mn: Vec<T>,
    mp: Vec<T>,
}

impl<T: Scalar> Feedback<T> {
    fn with(&self, inc: &FeedbackBundle<T>) -> Result<Self, StageError> {
        let add = |a: &[T], b: &[T]| a.iter().zip(b).map(|(x, y)| *x + *y).collect::<Vec<_>>();
        Ok(Self {
            es: inc.es,
            ma: self.ma.add(&inc.ma)?,
            mv: self.mv.add(&inc.mv)?,
            mt: add(&self.mt, &inc.mt),
            ms: add(&self.ms, &inc.ms),
            mn: add(&self.mn, &inc.mn),
            mp: add(&self.mp, &inc.mp),
        })
    }
}

/// Values flowing between stages during one pass.
#[derive(Debug, Clone)]
struct Tokens<T> {
    fb: Feedback<T>,
    sa: Vec<SparseMap<T>>,
    sv: Vec<SparseMap<T>>,
    fa: Matrix<T>,
    fv: Matrix<T>,
    hidden_t: Matrix<T>,
    hidden_s: Matrix<T>,
    ct: Vec<Vec<T>>,
    cs: Vec<Vec<T>>,
    cp: Vec<SemanticDecision<T>>,
    ei: T,
    error: T,
    rejected: Vec<&'static str>,
    increments: Option<FeedbackBundle<T>>,
}

impl<T: Scalar> Tokens<T> {
    fn new(fb: Feedback<T>) -> Self {
        Self {
            fb,
            sa: Vec::new(),
            sv: Vec::new(),
            fa: Matrix::zeros(0, 0),
            fv: Matrix::zeros(0, 0),
            hidden_t: Matrix::zeros(0, 0),
            hidden_s: Matrix::zeros(0, 0),
            ct: Vec::new(),
            cs: Vec::new(),
            cp: Vec::new(),
            ei: T::zero(),
            error: T::zero(),
            rejected: Vec::new(),
            increments: None,
        }
    }
}

struct Split {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

/// By rank within its class: ranks `4k+2` validate, `4k+3` test, the rest
/// train.
fn split(labels: &[usize], classes: usize) -> Split {
    let mut seen = vec![0usize; classes];
    let mut s = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (i, l) in labels.iter().enumerate() {
        match seen[*l] % 4 {
            2 => s.val.push(i),
            3 => s.test.push(i),
            _ => s.train.push(i),
        }
        seen[*l] += 1;
    }
    s
}

struct Runner<'a, T> {
    data: &'a [MediaSample<T>],
    labels: Vec<usize>,
    classes: usize,
    split: Split,
    model: DlModel<T>,
    prior: Vec<T>,
    cfg: &'a PipelineConfig,
}

impl<'a, T: Scalar> Runner<'a, T> {
    fn exec(&self, rule: &str, tk: &mut Tokens<T>, history: &mut MemoryHistory<T>) -> Result<(), StageError> {
        match rule {
            "TS_SC" => self.sc(tk),
            "TS_DL" => self.dl(tk),
            "TS_CC" => self.cc(tk),
            "TS_EL" => self.el(tk),
            "TS_RL" => self.rl(tk),
            "TS_IL" => self.il(tk, history),
            other => Err(StageError::Binding(format!("no stage bound to {other}"))),
        }
    }

    fn sc(&self, tk: &mut Tokens<T>) -> Result<(), StageError> {
        let cfg = self.cfg.sc();
        let (mut sa, mut sv) = (Vec::new(), Vec::new());
        for s in self.data {
            let pair = stage_sc(s, &tk.fb.mn, tk.fb.es, &cfg)?;
            sa.push(pair.temporal);
            sv.push(pair.spatial);
        }
        tk.sa = sa;
        tk.sv = sv;
        Ok(())
    }

    fn dl(&self, tk: &mut Tokens<T>) -> Result<(), StageError> {
        let out = stage_dl(&tk.sa, &tk.fb.ma, &tk.sv, &tk.fb.mv, &self.model)?;
        tk.fa = out.temporal;
        tk.fv = out.spatial;
        tk.hidden_t = out.hidden_temporal;
        tk.hidden_s = out.hidden_spatial;
        Ok(())
    }

    fn cc(&self, tk: &mut Tokens<T>) -> Result<(), StageError> {
        let (mut ct, mut cs) = (Vec::new(), Vec::new());
        for i in 0..tk.fa.rows() {
            let out = stage_cc(
                &Matrix::row_matrix(tk.fa.row(i)),
                &tk.fb.mt,
                &Matrix::row_matrix(tk.fv.row(i)),
                &tk.fb.ms,
                &self.prior,
            )?;
            ct.push(out.temporal);
            cs.push(out.spatial);
        }
        tk.ct = ct;
        tk.cs = cs;
        Ok(())
    }

    fn votes(&self, tk: &Tokens<T>, i: usize) -> [usize; 4] {
        expert_votes(
            &tk.ct[i],
            &tk.cs[i],
            &Matrix::row_matrix(tk.fa.row(i)),
            &Matrix::row_matrix(tk.fv.row(i)),
        )
    }

    fn el(&self, tk: &mut Tokens<T>) -> Result<(), StageError> {
        let mut wrong = [0usize; 4];
        for &i in &self.split.val {
            for (w, v) in wrong.iter_mut().zip(self.votes(tk, i)) {
                *w += usize::from(v != self.labels[i]);
            }
        }
        let n = T::from_usize(self.split.val.len()).unwrap();
        let errors = wrong.map(|w| T::from_usize(w).unwrap() / n);
        let weights = expert_weights(&errors);
        let mut cp = Vec::with_capacity(self.data.len());
        for i in 0..self.data.len() {
            cp.push(stage_el(
                &tk.ct[i],
                &tk.cs[i],
                &Matrix::row_matrix(tk.fa.row(i)),
                &Matrix::row_matrix(tk.fv.row(i)),
                &weights,
            )?);
        }
        tk.cp = cp;
        Ok(())
    }

    fn rl(&self, tk: &mut Tokens<T>) -> Result<(), StageError> {
        let cfg = RlConfig {
            lambda_s: self.cfg.lambda_s,
            lambda_i: self.cfg.lambda_i,
        };
        let (mut e, mut ei, mut es) = (T::zero(), T::zero(), T::zero());
        for &i in &self.split.train {
            let fb = stage_rl(&tk.cp[i], &Expectation::Label(self.labels[i]), &cfg)?;
            e = e + fb.error;
            ei = ei + fb.ei;
            es = es + fb.es;
        }
        let n = T::from_usize(self.split.train.len()).unwrap();
        tk.error = e / n;
        tk.ei = if self.cfg.force_zero_ei { T::zero() } else { ei / n };
        tk.fb.es = es / n;
        Ok(())
    }

    fn observation(&self, tk: &Tokens<T>, history: &MemoryHistory<T>) -> IlObservation<T> {
        let c = self.classes;
        let mut hidden_t = history.hidden_temporal.clone();
        let mut hidden_s = history.hidden_spatial.clone();
        let mut topic_t = vec![T::zero(); c];
        let mut topic_s = vec![T::zero(); c];
        let mut attention = vec![T::zero(); history.attention.len()];
        for class in 0..c {
            let members: Vec<usize> = self.split.train.iter().copied().filter(|i| self.labels[*i] == class).collect();
            if members.is_empty() {
                continue;
            }
            let n = T::from_usize(members.len()).unwrap();
            for (dst, src) in [(&mut hidden_t, &tk.hidden_t), (&mut hidden_s, &tk.hidden_s)] {
                let row = dst.row_mut(class);
                row.iter_mut().for_each(|v| *v = T::zero());
                for &i in &members {
                    row.iter_mut().zip(src.row(i)).for_each(|(a, b)| *a = *a + *b / n);
                }
            }
        }
        for m in [&mut hidden_t, &mut hidden_s] {
            let centre = m.mean_row();
            for class in 0..c {
                m.row_mut(class).iter_mut().zip(&centre).for_each(|(v, k)| *v = *v - *k);
            }
        }
        let n = T::from_usize(self.split.train.len()).unwrap();
        for &i in &self.split.train {
            for j in 0..c {
                let y = if j == self.labels[i] { T::one() } else { T::zero() };
                topic_t[j] = topic_t[j] + (y - tk.ct[i][j]) / n;
                topic_s[j] = topic_s[j] + (y - tk.cs[i][j]) / n;
            }
            let offset = tk.sv[i].size();
            for (k, v) in &tk.sv[i].entries {
                attention[*k] = attention[*k] + *v / n;
            }
            for (k, v) in &tk.sa[i].entries {
                attention[offset + *k] = attention[offset + *k] + *v / n;
            }
        }
        IlObservation {
            hidden_temporal: hidden_t,
            hidden_spatial: hidden_s,
            topic_temporal: topic_t,
            topic_spatial: topic_s,
            attention,
        }
    }

    fn il(&self, tk: &mut Tokens<T>, history: &mut MemoryHistory<T>) -> Result<(), StageError> {
        let obs = self.observation(tk, history);
        let train_cp: Vec<_> = self.split.train.iter().map(|i| tk.cp[*i].clone()).collect();
        let base = tk.fb.clone();
        let mut probe_err = None;
        let probe = |inc: &FeedbackBundle<T>| match base.with(inc).and_then(|fb| self.forward(fb)) {
            Ok(next) => next.error,
            Err(e) => {
                probe_err.get_or_insert(e);
                T::infinity()
            }
        };
        let cfg = IlConfig { eta: self.cfg.eta };
        let out = stage_il(tk.ei, tk.fb.es, &train_cp, &obs, history, &cfg, Some(tk.error), probe)?;
        if let Some(e) = probe_err {
            return Err(e);
        }
        tk.rejected = out.rejected;
        tk.increments = Some(out.increments);
        Ok(())
    }

    /// SC, DL, CC, EL, RL on the given feedback; what the next iteration
    /// will measure.
    fn forward(&self, fb: Feedback<T>) -> Result<Tokens<T>, StageError> {
        let mut tk = Tokens::new(fb);
        self.sc(&mut tk)?;
        self.dl(&mut tk)?;
        self.cc(&mut tk)?;
        self.el(&mut tk)?;
        self.rl(&mut tk)?;
        Ok(tk)
    }

    fn accuracy(&self, tk: &Tokens<T>) -> Accuracy {
        let n = self.split.test.len() as f64;
        let frac = |f: &dyn Fn(usize) -> usize| {
            self.split.test.iter().filter(|i| f(**i) == self.labels[**i]).count() as f64 / n
        };
        Accuracy {
            ensemble: frac(&|i| tk.cp[i].label),
            temporal: frac(&|i| argmax(&tk.ct[i])),
            spatial: frac(&|i| argmax(&tk.cs[i])),
        }
    }
}

fn checked_run(program: &crate::ChamProgram, cfg: &RunConfig, name: &str) -> Result<Trace, StageError> {
    let mut trace = run(program, &program.solution, cfg);
    trace.program = name.to_owned();
    if trace.truncated {
        return Err(StageError::Binding(format!("{name} program did not terminate")));
    }
    Ok(trace)
}

/// Runs `cfg.iterations` learning iterations on `dataset` followed by one
/// recognition pass on the test split.
///
/// The DL network is drawn from `derive_seed(seed, "DL", 0)` and the rule
/// schedule of iteration `k` from `derive_seed(seed, "schedule", k)`.
pub fn run_pipeline<T: Scalar>(
    dataset: &[MediaSample<T>],
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<PipelineMetrics, StageError> {
    let bad = |message: String| StageError::InvalidConfig {
        stage: "pipeline",
        message,
    };
    if cfg.classes < 2 {
        return Err(bad("at least two classes are required".into()));
    }
    let first = dataset.first().ok_or_else(|| bad("empty dataset".into()))?;
    let (h, w) = first.spatial.shape();
    let t = first.temporal.len();
    let mut labels = Vec::with_capacity(dataset.len());
    for (i, s) in dataset.iter().enumerate() {
        match s.label {
            Some(l) if l < cfg.classes => labels.push(l),
            _ => return Err(bad(format!("sample {i} has no label below {}", cfg.classes))),
        }
        if s.spatial.shape() != (h, w) || s.temporal.len() != t {
            return Err(super::dim_err("pipeline", format!("{h}x{w} frame, {t} signal"), format!("sample {i}")));
        }
    }
    let split = split(&labels, cfg.classes);
    if split.train.is_empty() || split.val.is_empty() || split.test.is_empty() {
        return Err(bad("too few samples for train/validation/test splits".into()));
    }
    let mut prior = vec![T::zero(); cfg.classes];
    for &i in &split.train {
        prior[labels[i]] = prior[labels[i]] + T::one();
    }
    let n_train = T::from_usize(split.train.len()).unwrap();
    prior.iter_mut().for_each(|p| *p = *p / n_train);

    let fw = CnccFramework::new();
    check_bindings(&fw)?;
    let model = DlModel::seeded(derive_seed(seed, "DL", 0), t, h * w, cfg.classes, cfg.hidden, cfg.readout_scale);
    let runner = Runner {
        data: dataset,
        labels,
        classes: cfg.classes,
        split,
        model,
        prior,
        cfg,
    };
    let attention_len = h * w + t;
    let mut history = MemoryHistory::zeros(cfg.classes, cfg.hidden, attention_len);
    let mut fb = Feedback {
        es: T::zero(),
        ma: runner.model.zero_adjustment(),
        mv: runner.model.zero_adjustment(),
        mt: vec![T::zero(); cfg.classes],
        ms: vec![T::zero(); cfg.classes],
        mn: vec![T::zero(); attention_len],
        mp: vec![T::zero(); cfg.classes],
    };

    let terminal = reacted_solution();
    let mut iterations = Vec::new();
    let mut learning = Vec::new();
    for it in 1..=cfg.iterations {
        let at = |e: StageError| StageError::AtIteration {
            iteration: it,
            source: Box::new(e),
        };
        let run_cfg = RunConfig {
            scheduler: cfg.scheduler,
            seed: derive_seed(seed, "schedule", it as u64),
            ..RunConfig::default()
        };
        let trace = checked_run(&fw.learning, &run_cfg, "learning").map_err(at)?;
        if trace.terminal != terminal {
            return Err(at(StageError::Binding("learning run did not reach the reacted solution".into())));
        }
        let mut tk = Tokens::new(fb.clone());
        for step in &trace.steps {
            runner.exec(&step.rule, &mut tk, &mut history).map_err(at)?;
        }
        let inc = tk
            .increments
            .take()
            .ok_or_else(|| at(StageError::Binding("IL did not fire".into())))?;
        iterations.push(IterationMetrics {
            iteration: it,
            error: tk.error.to_f64_lossy(),
            ei: tk.ei.to_f64_lossy(),
            es: tk.fb.es.to_f64_lossy(),
            rejected: tk.rejected.iter().map(|s| s.to_string()).collect(),
        });
        fb = fb.with(&inc).map_err(at)?;
        learning.push(trace.rule_sequence().into_iter().map(str::to_owned).collect());
    }

    let rec_cfg = RunConfig {
        scheduler: cfg.scheduler,
        seed: derive_seed(seed, "schedule", 0),
        ..RunConfig::default()
    };
    let trace = checked_run(&fw.recognition, &rec_cfg, "recognition")?;
    let mut tk = Tokens::new(fb);
    for step in &trace.steps {
        runner.exec(&step.rule, &mut tk, &mut history)?;
    }
    if tk.cp.len() != dataset.len() {
        return Err(StageError::Binding("recognition did not produce decisions".into()));
    }
    Ok(PipelineMetrics {
        config: cfg.clone(),
        seed,
        iterations,
        accuracy: runner.accuracy(&tk),
        trace: TraceSummary {
            learning,
            recognition: trace.rule_sequence().into_iter().map(str::to_owned).collect(),
        },
    })
}
