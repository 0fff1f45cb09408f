//! Batch verification of documents and deterministic reports.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::algebra::{eta_fitting, eta_wiles, split_characters, Character, FlatAlgebra, LocalityPolicy};
use crate::congmod::{congruence_module, nonzero_divisors};
use crate::detect::{
    brute_force_congruence_oracle, characters_over, cotangent_order, detect_congruence, surjection_eta_inequality,
    Detection, ExtCharacter, Splitting,
};
use crate::doc::{self, Bundle, Document, Instance};
use crate::duality::{
    congruence_module_pairing_order, delta_pairing, unchecked_etas, verify_pairing_hypotheses,
    verify_theta_adjointness, PairingInstance, ThetaLink,
};
use crate::dvr::{format_rat, Extension, Rat};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub exit_code: i32,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        ErrorRecord { kind: e.kind().into(), exit_code: e.exit_code(), message: e.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseReport {
    pub id: String,
    pub kind: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
    pub results: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub cases: Vec<CaseReport>,
    pub summary: Summary,
}

impl Report {
    pub fn new(cases: Vec<CaseReport>) -> Self {
        let count = |s: Status| cases.iter().filter(|c| c.status == s).count();
        let summary =
            Summary { total: cases.len(), passed: count(Status::Pass), failed: count(Status::Fail), errors: count(Status::Error) };
        Report { cases, summary }
    }

    /// 0 when everything passes, 1 when a lemma assertion failed, otherwise
    /// the largest error status.
    pub fn exit_code(&self) -> i32 {
        if self.summary.failed > 0 {
            return 1;
        }
        self.cases.iter().filter_map(|c| c.error.as_ref().map(|e| e.exit_code)).max().unwrap_or(0)
    }

    pub fn mask_timings(&mut self) {
        for c in &mut self.cases {
            c.elapsed_ms = None;
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

fn strings(v: &[Rat]) -> Value {
    Value::from(v.iter().map(format_rat).collect::<Vec<_>>())
}

fn policy_for(t: &FlatAlgebra) -> LocalityPolicy {
    if t.validate().passes(LocalityPolicy::Strict) {
        LocalityPolicy::Strict
    } else {
        LocalityPolicy::Semilocal
    }
}

struct Outcome {
    results: Map<String, Value>,
    failures: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { results: Map::new(), failures: Vec::new() }
    }

    fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.results.insert(key.into(), v.into());
    }
}

/// Both η routes on `(T, λ)`; a mismatch is recorded as a failure.
fn check_routes(t: &FlatAlgebra, lambda: &Character, policy: LocalityPolicy, out: &mut Outcome) -> Result<i64> {
    let w = eta_wiles(t, lambda, policy)?;
    let f = eta_fitting(t, lambda, policy)?;
    out.set("eta_wiles", w);
    out.set("eta_fitting", f);
    if w != f {
        out.failures.push(format!(
            "η route mismatch: λ(Ann_T(ker λ)) gives exponent {w}, Fitting ideal of eT/(eT ∩ T) gives {f}"
        ));
    }
    Ok(w)
}

/// Brute-force congruence partners of `λ` among the characters of `T`
/// over `ext`, from the eigenvalue table when the algebra carries one.
fn oracle_partners(t: &FlatAlgebra, lambda: &Character, ext: &Extension) -> Result<Option<Vec<usize>>> {
    if ext.degree() == 1 {
        let rows: Vec<Vec<Vec<Rat>>> = match t.eigensystem() {
            Some(e) => (0..e.values.rows()).map(|k| e.values.row(k).iter().map(|x| vec![x.clone()]).collect()).collect(),
            None => split_characters(t)?.iter().map(|c| c.values().iter().map(|x| vec![x.clone()]).collect()).collect(),
        };
        let own: Vec<Vec<Rat>> = match t.eigensystem() {
            Some(e) => e.generators.iter().map(|g| vec![lambda.apply(g)]).collect(),
            None => lambda.values().iter().map(|x| vec![x.clone()]).collect(),
        };
        let Some(i) = rows.iter().position(|r| *r == own) else {
            return Err(Error::Validation("λ is not among the characters of T".into()));
        };
        return Ok(Some(brute_force_congruence_oracle(&rows, i, ext)));
    }
    let chars = characters_over(t, ext)?;
    let own = ExtCharacter::from_base(lambda, ext);
    let rows: Vec<Vec<Vec<Rat>>> = chars.into_iter().map(|c| c.values).collect();
    Ok(rows.iter().position(|r| *r == own.values).map(|i| brute_force_congruence_oracle(&rows, i, ext)))
}

fn detection_json(d: &Detection) -> Value {
    json!({
        "congruent": d.congruent(),
        "splitting": serde_json::to_value(&d.splitting).expect("serializable"),
        "witness": d.witness.as_ref().map(|w| json!({
            "partner": w.partner.values.iter().map(|v| strings(v)).collect::<Vec<_>>(),
            "depth": w.depth,
        })),
    })
}

/// Congruence detection against the brute-force oracle and `η >= 1`.
fn check_detection(
    t: &FlatAlgebra,
    lambda: &Character,
    ext: Option<&Extension>,
    policy: LocalityPolicy,
    out: &mut Outcome,
) -> Result<()> {
    let d = detect_congruence(t, lambda, ext, policy)?;
    out.set("detection", detection_json(&d));
    if d.splitting != Splitting::Complete {
        return Ok(());
    }
    let trivial = Extension::trivial(t.prime());
    let partners = oracle_partners(t, lambda, ext.unwrap_or(&trivial))?;
    let Some(partners) = partners else {
        return Ok(());
    };
    out.set("oracle_partners", partners.clone());
    let (w, o, e) = (d.witness.is_some(), !partners.is_empty(), d.congruent());
    if w != o || w != e {
        out.failures.push(format!(
            "congruence detection: witness found {w}, brute-force partners exist {o}, η ≥ 1 {e}"
        ));
    }
    Ok(())
}

/// Which checks a job runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Eta,
    Detect,
    Pairing,
    Cotangent,
    All,
}

impl Check {
    fn wants(self, c: Check) -> bool {
        self == Check::All || self == c
    }
}

fn check_instance(inst: &Instance, check: Check, out: &mut Outcome) -> Result<()> {
    let (t, lambda, policy) = (&inst.algebra, &inst.character, inst.policy);
    t.validate().require(policy)?;
    lambda.validate(t)?;
    out.set("prime", t.prime().get());
    out.set("rank", t.rank());
    let eta = check_routes(t, lambda, policy, out)?;
    if check.wants(Check::Detect) {
        check_detection(t, lambda, inst.extension.as_ref(), policy, out)?;
    }
    if check.wants(Check::Eta) {
        let mut modules = Vec::new();
        for m in &inst.modules {
            let data = congruence_module(t, m, lambda, policy)?;
            modules.push(json!({
                "rank": m.rank(),
                "eta": data.eta_exponent,
                "elementary_divisors": nonzero_divisors(&data),
            }));
        }
        if !modules.is_empty() {
            out.set("modules", modules);
        }
    }
    if check.wants(Check::Cotangent) {
        let Some((r, images)) = &inst.presentation else {
            if check == Check::Cotangent {
                return Err(Error::Validation("instance has no ring presentation".into()));
            }
            return Ok(());
        };
        let cert = surjection_eta_inequality(r, t, images, lambda, policy)?;
        let cot = serde_json::to_value(cert.cotangent).expect("serializable");
        out.set("cotangent", cot.clone());
        out.set("cotangent_strict", cert.strict);
        if !cert.holds {
            out.failures.push(format!("cotangent inequality: #(p/p²) = p^{cot} is below #(O/η) = p^{eta}"));
        }
    }
    Ok(())
}

fn check_pairing(pi: &PairingInstance, theta: Option<&ThetaLink>, out: &mut Outcome) -> Result<()> {
    let policy = if policy_for(&pi.t1) == LocalityPolicy::Strict && policy_for(&pi.t2) == LocalityPolicy::Strict {
        LocalityPolicy::Strict
    } else {
        LocalityPolicy::Semilocal
    };
    let cert = verify_pairing_hypotheses(pi, policy)?;
    out.set("perfect", cert.perfect);
    out.set("left_orthogonal", cert.left_orthogonal);
    out.set("right_orthogonal", cert.right_orthogonal);
    if let Some(theta) = theta {
        let tc = verify_theta_adjointness(&pi.t1, &pi.m1, &pi.t2, &pi.m2, &pi.gram, theta)?;
        out.set("theta_adjoint", tc.holds);
        let composed: Vec<Rat> = (0..pi.t1.rank()).map(|i| pi.lambda2.apply(&theta.apply(&pi.t1.basis_vector(i)))).collect();
        if !tc.holds || composed != pi.lambda1.values() {
            out.failures.push("θ coherence: [t x, y] = [x, θ(t) y] or λ̃∘θ = λ fails".into());
        }
    }
    if !cert.all_pass() {
        let (e1, e2) = unchecked_etas(pi, policy)?;
        out.set("hypotheses_hold", false);
        out.set("eta1", e1);
        out.set("eta2", e2);
        return Ok(());
    }
    out.set("hypotheses_hold", true);
    let orders = congruence_module_pairing_order(pi, policy)?;
    out.set("eta1", orders.eta1);
    out.set("eta2", orders.eta2);
    out.set("induced_perfect", orders.induced_nondegenerate);
    if orders.eta1 != orders.eta2 {
        out.failures.push(format!("duality transfer: η_λ(M1) = {} but η_λ̃(M2) = {}", orders.eta1, orders.eta2));
    }
    if !orders.induced_nondegenerate {
        out.failures.push("duality transfer: induced pairing on congruence modules is not perfect".into());
    }
    match delta_pairing(pi, policy) {
        Ok(d) => {
            out.set("delta", d);
            if d != orders.eta1 {
                out.failures.push(format!("δ-pairing: val[δ1, δ2] = {d} differs from η = {}", orders.eta1));
            }
        }
        Err(Error::Hypothesis(_)) => out.set("delta", Value::Null),
        Err(e) => return Err(e),
    }
    Ok(())
}

fn check_bundle(b: &Bundle, check: Check, out: &mut Outcome) -> Result<()> {
    out.set("provenance", serde_json::to_value(&b.provenance).expect("serializable"));
    if check.wants(Check::Pairing) {
        check_pairing(&b.pairing, None, out)?;
    }
    let (t, lambda) = (&b.pairing.t1, &b.pairing.lambda1);
    check_routes(t, lambda, LocalityPolicy::Strict, out)?;
    if check.wants(Check::Detect) {
        check_detection(t, lambda, None, LocalityPolicy::Strict, out)?;
    }
    Ok(())
}

fn wrong_kind(check: Check, doc: &Document) -> Error {
    Error::Validation(format!("{check:?} job cannot take a {} document", doc.kind()).to_lowercase())
}

/// Runs the checks selected by `check` that apply to `doc`.
pub fn check_document_with(doc: &Document, check: Check) -> Result<(Map<String, Value>, Vec<String>)> {
    let mut out = Outcome::new();
    match (doc, check) {
        (Document::Instance(i), Check::Eta | Check::Detect | Check::Cotangent | Check::All) => {
            check_instance(i, check, &mut out)?
        }
        (Document::Bundle(b), Check::Eta | Check::Detect | Check::Pairing | Check::All) => {
            check_bundle(b, check, &mut out)?
        }
        (Document::Pairing(pi, theta), Check::Pairing | Check::All) => check_pairing(pi, theta.as_ref(), &mut out)?,
        (Document::Presentation(r), Check::Cotangent | Check::All) => {
            out.set("cotangent", serde_json::to_value(cotangent_order(r)?).expect("serializable"))
        }
        (_, Check::All) => return check_document(doc),
        _ => return Err(wrong_kind(check, doc)),
    }
    Ok((out.results, out.failures))
}

/// Runs every check applicable to `doc`.
pub fn check_document(doc: &Document) -> Result<(Map<String, Value>, Vec<String>)> {
    let mut out = Outcome::new();
    match doc {
        Document::Algebra(t) => {
            let cert = t.validate();
            out.set("certificate", serde_json::to_value(cert).expect("serializable"));
            cert.require(LocalityPolicy::Semilocal)?;
        }
        Document::Character(c) => out.set("values", strings(c.values())),
        Document::Module(m) => out.set("rank", m.rank()),
        _ => return check_document_with(doc, Check::All),
    }
    Ok((out.results, out.failures))
}

pub fn run_case(id: &str, doc: &Document) -> CaseReport {
    run_case_with(id, doc, Check::All)
}

pub fn run_case_with(id: &str, doc: &Document, check: Check) -> CaseReport {
    let start = Instant::now();
    let outcome = check_document_with(doc, check);
    let elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    let (status, results, failures, error) = match outcome {
        Ok((results, failures)) if failures.is_empty() => (Status::Pass, results, failures, None),
        Ok((results, failures)) => (Status::Fail, results, failures, None),
        Err(Error::Lemma(msg)) => (Status::Fail, Map::new(), vec![msg], None),
        Err(e) => (Status::Error, Map::new(), Vec::new(), Some(ErrorRecord::from(&e))),
    };
    CaseReport { id: id.into(), kind: doc.kind().into(), status, failures, error, results, elapsed_ms }
}

/// Checks all cases in parallel; the report keeps the order of `cases`.
pub fn run_suite(cases: &[(String, Document)]) -> Report {
    Report::new(cases.par_iter().map(|(id, d)| run_case(id, d)).collect())
}

/// Every `*.json` file under `dir`, in file-name order. Files that fail to
/// parse become error cases.
pub fn run_directory(dir: &Path) -> Result<Report> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let cases: Vec<CaseReport> = paths
        .par_iter()
        .map(|p| {
            let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            match doc::read(p) {
                Ok(d) => run_case(&id, &d),
                Err(e) => CaseReport {
                    id,
                    kind: "unknown".into(),
                    status: Status::Error,
                    failures: Vec::new(),
                    error: Some(ErrorRecord::from(&e)),
                    results: Map::new(),
                    elapsed_ms: None,
                },
            }
        })
        .collect();
    Ok(Report::new(cases))
}
