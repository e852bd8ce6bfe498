//! File formats: JSON for cost tables, policy trees and evaluation
//! reports, Graphviz DOT for trees, CSV for baseline curves.
//!
//! Rationals are written as `"num/den"` strings; tree and report files add
//! a decimal rendering next to each exact value.

use serde::{Deserialize, Serialize};

use crate::baselines::CurveRow;
use crate::bellman::{slice_upper, Continuation, CostTable, NominalModel, StateSlice, Threshold};
use crate::policy::{EvalReport, PolicyNode, PolicyTree, StopDecision};
use crate::pwl::{PwlConcave, Segment, SplitGroup, SplitMap};
use crate::rational::{self, Rational};
use crate::Error;

const DECIMAL_DIGITS: usize = 12;

fn r(x: &Rational) -> String {
    rational::to_string(x)
}

fn p(s: &str) -> Result<Rational, Error> {
    rational::parse(s)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ExactDecimal {
    pub exact: String,
    pub decimal: String,
}

impl ExactDecimal {
    pub fn new(x: &Rational) -> Self {
        ExactDecimal {
            exact: r(x),
            decimal: rational::to_decimal(x, DECIMAL_DIGITS),
        }
    }

    fn value(&self) -> Result<Rational, Error> {
        p(&self.exact)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelJson {
    pub alphabet_size: usize,
    pub p1: Vec<String>,
    pub p2: Vec<String>,
    pub lambda1: String,
    pub lambda2: String,
    pub horizon: usize,
}

impl ModelJson {
    pub fn new(m: &NominalModel) -> Self {
        ModelJson {
            alphabet_size: m.alphabet_size(),
            p1: m.p1.iter().map(r).collect(),
            p2: m.p2.iter().map(r).collect(),
            lambda1: r(&m.lambda1),
            lambda2: r(&m.lambda2),
            horizon: m.horizon,
        }
    }

    pub fn model(&self) -> Result<NominalModel, Error> {
        let parse_all = |v: &[String]| v.iter().map(|s| p(s)).collect::<Result<Vec<_>, _>>();
        let model = NominalModel::new(
            parse_all(&self.p1)?,
            parse_all(&self.p2)?,
            p(&self.lambda1)?,
            p(&self.lambda2)?,
            self.horizon,
        )?;
        if model.alphabet_size() != self.alphabet_size {
            return Err(Error::Parse("alphabet_size disagrees with the PMFs".into()));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentJson {
    pub slope: u64,
    pub width: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PwlJson {
    pub f0: String,
    pub upper: String,
    pub segments: Vec<SegmentJson>,
}

impl PwlJson {
    fn new(f: &PwlConcave) -> Self {
        PwlJson {
            f0: r(f.value_at_zero()),
            upper: r(f.upper()),
            segments: f
                .segments()
                .iter()
                .map(|s| SegmentJson {
                    slope: s.slope,
                    width: r(&s.width),
                })
                .collect(),
        }
    }

    fn pwl(&self) -> Result<PwlConcave, Error> {
        let segs = self
            .segments
            .iter()
            .map(|s| Ok(Segment::new(s.slope, p(&s.width)?)))
            .collect::<Result<Vec<_>, Error>>()?;
        PwlConcave::new(p(&self.f0)?, segs, p(&self.upper)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPartJson {
    pub symbol: usize,
    pub width: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitGroupJson {
    pub slope: u64,
    pub start: String,
    pub width: String,
    pub parts: Vec<SplitPartJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateJson {
    pub depth: usize,
    pub counts: Vec<u32>,
    pub z1: String,
    pub z2: String,
    pub g: String,
    pub z0_star: String,
    pub rho: PwlJson,
    pub d: Option<PwlJson>,
    pub split: Option<Vec<SplitGroupJson>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostTableJson {
    pub model: ModelJson,
    pub slice_upper: String,
    pub root_value: String,
    pub root_expected_sample_size: u64,
    pub states: Vec<StateJson>,
}

fn state_json(s: &StateSlice) -> StateJson {
    StateJson {
        depth: s.state.depth,
        counts: s.state.counts.clone(),
        z1: r(&s.state.z1),
        z2: r(&s.state.z2),
        g: r(&s.state.g),
        z0_star: s.threshold.to_json_string(),
        rho: PwlJson::new(&s.rho),
        d: s.cont.as_ref().map(|c| PwlJson::new(&c.d)),
        split: s.cont.as_ref().map(|c| {
            c.split
                .groups
                .iter()
                .map(|g| SplitGroupJson {
                    slope: g.slope,
                    start: r(&g.start),
                    width: r(&g.width),
                    parts: g
                        .parts
                        .iter()
                        .map(|(x, w)| SplitPartJson {
                            symbol: *x,
                            width: r(w),
                        })
                        .collect(),
                })
                .collect()
        }),
    }
}

pub fn cost_table_json(table: &CostTable) -> CostTableJson {
    CostTableJson {
        model: ModelJson::new(&table.model),
        slice_upper: r(&slice_upper()),
        root_value: r(&table.root_value()),
        root_expected_sample_size: table.root_expected_sample_size(),
        states: table.levels.iter().flatten().map(state_json).collect(),
    }
}

pub fn cost_table_to_string(table: &CostTable) -> String {
    let mut s = serde_json::to_string_pretty(&cost_table_json(table)).expect("serializable");
    s.push('\n');
    s
}

/// Parses and fully re-validates a cost table.
pub fn cost_table_from_str(text: &str) -> Result<CostTable, Error> {
    let doc: CostTableJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let model = doc.model.model()?;
    let mut levels: Vec<Vec<StateSlice>> = vec![Vec::new(); model.horizon + 1];
    for st in &doc.states {
        if st.depth > model.horizon {
            return Err(Error::Parse(format!(
                "state at depth {} beyond horizon",
                st.depth
            )));
        }
        let threshold = if st.z0_star == "always-continue" {
            Threshold::AlwaysContinue
        } else {
            Threshold::At(p(&st.z0_star)?)
        };
        let cont = match (&st.d, &st.split) {
            (Some(d), Some(groups)) => {
                let groups = groups
                    .iter()
                    .map(|g| {
                        Ok(SplitGroup {
                            slope: g.slope,
                            start: p(&g.start)?,
                            width: p(&g.width)?,
                            parts: g
                                .parts
                                .iter()
                                .map(|q| Ok((q.symbol, p(&q.width)?)))
                                .collect::<Result<Vec<_>, Error>>()?,
                        })
                    })
                    .collect::<Result<Vec<_>, Error>>()?;
                Some(Continuation {
                    d: d.pwl()?,
                    split: SplitMap {
                        arity: model.alphabet_size(),
                        groups,
                    },
                })
            }
            (None, None) => None,
            _ => return Err(Error::Parse("d and split must appear together".into())),
        };
        let mut state = model.state(&st.counts);
        state.depth = st.depth;
        levels[st.depth].push(StateSlice {
            state,
            rho: st.rho.pwl()?,
            cont,
            threshold,
        });
    }
    CostTable::from_levels(model, levels)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: usize,
    pub parent: Option<usize>,
    pub symbol: Option<usize>,
    pub path: Vec<usize>,
    pub depth: usize,
    pub counts: Vec<u32>,
    pub z0: ExactDecimal,
    pub e_enter: u64,
    pub e_continue: Option<u64>,
    pub p_continue: ExactDecimal,
    pub stop_decision: Option<String>,
    pub lfd: Option<Vec<ExactDecimal>>,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeJson {
    pub model: ModelJson,
    pub max_depth: usize,
    pub nodes: Vec<NodeJson>,
}

pub fn tree_json(tree: &PolicyTree) -> TreeJson {
    TreeJson {
        model: ModelJson::new(&tree.model),
        max_depth: tree.max_depth,
        nodes: tree
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| NodeJson {
                id: i,
                parent: n.parent,
                symbol: n.symbol,
                path: tree.path(i),
                depth: n.depth,
                counts: n.counts.clone(),
                z0: ExactDecimal::new(&n.z0),
                e_enter: n.e_enter,
                e_continue: n.e_continue,
                p_continue: ExactDecimal::new(&n.p_continue),
                stop_decision: n.stop_decision.map(|d| d.as_str().to_string()),
                lfd: n
                    .lfd
                    .as_ref()
                    .map(|l| l.iter().map(ExactDecimal::new).collect()),
                children: n.children.clone(),
            })
            .collect(),
    }
}

pub fn tree_to_string(tree: &PolicyTree) -> String {
    let mut s = serde_json::to_string_pretty(&tree_json(tree)).expect("serializable");
    s.push('\n');
    s
}

/// Parses a tree file. Only the structure is checked here; the numbers are
/// left for the verifiers to judge.
pub fn tree_from_str(text: &str) -> Result<PolicyTree, Error> {
    let doc: TreeJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let model = doc.model.model()?;
    let k = model.alphabet_size();
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for (i, n) in doc.nodes.iter().enumerate() {
        if n.id != i {
            return Err(Error::Parse(format!("node {i} carries id {}", n.id)));
        }
        let stop_decision = match n.stop_decision.as_deref() {
            None => None,
            Some("H1") => Some(StopDecision::H1),
            Some("H2") => Some(StopDecision::H2),
            Some("tie") => Some(StopDecision::Tie),
            Some(other) => return Err(Error::Parse(format!("unknown decision {other:?}"))),
        };
        let lfd = match &n.lfd {
            Some(v) => Some(v.iter().map(|e| e.value()).collect::<Result<Vec<_>, _>>()?),
            None => None,
        };
        let p_continue = n.p_continue.value()?;
        if !rational::is_probability(&p_continue) {
            return Err(Error::Parse(format!("node {i}: p_continue outside [0, 1]")));
        }
        if !(n.children.is_empty() || n.children.len() == k)
            || n.children.iter().any(|&c| c <= i || c >= doc.nodes.len())
            || n.counts.len() != k
        {
            return Err(Error::Parse(format!("node {i}: malformed links")));
        }
        for (x, &c) in n.children.iter().enumerate() {
            let child = &doc.nodes[c];
            if child.parent != Some(i) || child.symbol != Some(x) || child.depth != n.depth + 1 {
                return Err(Error::Parse(format!("node {c}: inconsistent parent link")));
            }
        }
        nodes.push(PolicyNode {
            parent: n.parent,
            symbol: n.symbol,
            depth: n.depth,
            counts: n.counts.clone(),
            z0: n.z0.value()?,
            e_enter: n.e_enter,
            e_continue: n.e_continue,
            p_continue,
            stop_decision,
            lfd,
            children: n.children.clone(),
        });
    }
    if nodes.is_empty() {
        return Err(Error::EmptyTree);
    }
    Ok(PolicyTree {
        model,
        max_depth: doc.max_depth,
        nodes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalJson {
    pub name: String,
    pub probe: Vec<ExactDecimal>,
    pub expected_sample_size: ExactDecimal,
    pub alpha1: ExactDecimal,
    pub alpha2: ExactDecimal,
    pub stop_time_pmf: Vec<ExactDecimal>,
}

pub fn eval_json(name: &str, report: &EvalReport) -> EvalJson {
    EvalJson {
        name: name.to_string(),
        probe: report.probe.iter().map(ExactDecimal::new).collect(),
        expected_sample_size: ExactDecimal::new(&report.expected_sample_size),
        alpha1: ExactDecimal::new(&report.alpha1),
        alpha2: ExactDecimal::new(&report.alpha2),
        stop_time_pmf: report.stop_time_pmf.iter().map(ExactDecimal::new).collect(),
    }
}

pub fn eval_reports_to_string(reports: &[(String, EvalReport)]) -> String {
    let docs: Vec<EvalJson> = reports.iter().map(|(n, r)| eval_json(n, r)).collect();
    let mut s = serde_json::to_string_pretty(&docs).expect("serializable");
    s.push('\n');
    s
}

fn gray(stop: f64) -> String {
    let v = (255.0 - 160.0 * stop.clamp(0.0, 1.0)).round() as u8;
    format!("#{v:02x}{v:02x}{v:02x}")
}

/// Graphviz rendering. Continuing nodes are labelled `e_enter/e_continue`
/// and shaded by their stopping probability; sure stops read `0` and are
/// colored by decision. Edges carry the LFD probability.
pub fn tree_to_dot(tree: &PolicyTree) -> String {
    let mut out = String::from("digraph policy {\n");
    out.push_str("  node [shape=box, style=\"rounded,filled\", fontname=\"Helvetica\"];\n");
    out.push_str("  edge [fontname=\"Helvetica\", fontsize=10];\n");
    for (i, n) in tree.nodes.iter().enumerate() {
        let (label, fill) = if n.continues() {
            let stop = 1.0 - rational::to_f64(&n.p_continue);
            (
                format!("{}/{}", n.e_enter, n.e_continue.unwrap_or(0)),
                gray(stop),
            )
        } else {
            let color = match n.stop_decision {
                Some(StopDecision::H1) => "#8fb8e8",
                Some(StopDecision::H2) => "#e89a8f",
                _ => "#c9b3e0",
            };
            ("0".to_string(), color.to_string())
        };
        out.push_str(&format!(
            "  n{i} [label=\"{label}\", fillcolor=\"{fill}\"];\n"
        ));
    }
    for (i, n) in tree.nodes.iter().enumerate() {
        let Some(lfd) = &n.lfd else { continue };
        for (x, &c) in n.children.iter().enumerate() {
            out.push_str(&format!(
                "  n{i} -> n{c} [label=\"{} ({})\"];\n",
                r(&lfd[x]),
                rational::to_fixed(&lfd[x], 6)
            ));
        }
    }
    out.push_str("}\n");
    out
}

pub const CURVE_HEADER: &str = "theta,expected_sample_size,alpha1,alpha2,test_name";

pub fn curves_to_csv(rows: &[CurveRow]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            rational::to_decimal(&row.theta, DECIMAL_DIGITS),
            rational::to_decimal(&row.expected_sample_size, DECIMAL_DIGITS),
            rational::to_decimal(&row.alpha1, DECIMAL_DIGITS),
            rational::to_decimal(&row.alpha2, DECIMAL_DIGITS),
            row.test_name
        ));
    }
    out
}

/// 12 significant digits, the CSV number format.
pub fn decimal(x: &Rational) -> String {
    rational::to_decimal(x, DECIMAL_DIGITS)
}
