//! Versioned JSON documents for algebras, characters, modules, pairings,
//! ring presentations, eta/detect instances and modular-symbol bundles.
//!
//! Every document has the shape
//! `{"format": "congruence-doc", "version": 1, "kind": ..., "body": ...}`.
//! Rationals are strings `"a/b"` (or `"a"`); unknown fields are rejected.

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::algebra::{Character, EigensystemPresentation, FlatAlgebra, LocalityPolicy};
use crate::congmod::HeckeModule;
use crate::detect::{LocalRingPresentation, SparsePoly};
use crate::duality::{PairingInstance, ThetaLink};
use crate::dvr::{format_rat, parse_rat, Extension, ExtensionKind, Lattice, Matrix, Prime, Rat};
use crate::error::{Error, Result};

pub const FORMAT: &str = "congruence-doc";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    format: String,
    version: u32,
    kind: String,
    body: serde_json::Value,
}

type Vector = Vec<String>;
type Rows = Vec<Vec<String>>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDoc {
    pub prime: u64,
    pub rank: usize,
    /// Nonzero structure constants `(i, j, k, c)` with `b_i b_j = Σ c b_k`.
    pub constants: Vec<(usize, usize, usize, String)>,
    pub unit: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigensystem: Option<EigensystemDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigensystemDoc {
    pub values: Rows,
    pub generators: Rows,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleDoc {
    pub prime: u64,
    pub ambient: usize,
    pub basis: Rows,
    pub action: Vec<Rows>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingDoc {
    pub t1: AlgebraDoc,
    pub m1: ModuleDoc,
    pub lambda1: Vector,
    pub t2: AlgebraDoc,
    pub m2: ModuleDoc,
    pub lambda2: Vector,
    pub gram: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Rows>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresentationDoc {
    pub prime: u64,
    pub variables: usize,
    /// Each relation is a list of `(exponents, coefficient)` terms.
    pub relations: Vec<Vec<(Vec<u32>, String)>>,
    pub theta_point: Vector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionDoc {
    pub kind: ExtensionKind,
    /// Non-leading coefficients of the monic defining polynomial.
    pub modulus: Vector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub algebra: AlgebraDoc,
    pub character: Vector,
    #[serde(default, skip_serializing_if = "is_strict")]
    pub policy: LocalityPolicy,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modules: Vec<ModuleDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub presentation: Option<PresentationDoc>,
    /// Images of the presentation's variables in the algebra.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<Rows>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub level: u64,
    pub prime: u64,
    pub genus: u64,
    pub prime_bound: u64,
    pub generators: Vec<u64>,
    /// Residues of `a_q` mod `p` for the generators.
    pub residual_class: Vec<u64>,
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleDoc {
    pub algebra: AlgebraDoc,
    pub character: Vector,
    pub module: ModuleDoc,
    pub gram: Rows,
    pub provenance: Provenance,
}

fn is_strict(p: &LocalityPolicy) -> bool {
    *p == LocalityPolicy::Strict
}

/// An eta/detect/cotangent job input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub algebra: FlatAlgebra,
    pub character: Character,
    pub policy: LocalityPolicy,
    pub modules: Vec<HeckeModule>,
    pub extension: Option<Extension>,
    pub presentation: Option<(LocalRingPresentation, Vec<Vec<Rat>>)>,
}

impl Instance {
    pub fn new(algebra: FlatAlgebra, character: Character) -> Self {
        Instance {
            algebra,
            character,
            policy: LocalityPolicy::Strict,
            modules: Vec::new(),
            extension: None,
            presentation: None,
        }
    }
}

/// A localized modular-symbol instance: self-dual pairing with `θ = id`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bundle {
    pub pairing: PairingInstance,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Document {
    Algebra(FlatAlgebra),
    Character(Character),
    Module(HeckeModule),
    Pairing(PairingInstance, Option<ThetaLink>),
    Presentation(LocalRingPresentation),
    Instance(Box<Instance>),
    Bundle(Box<Bundle>),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Algebra(_) => "algebra",
            Document::Character(_) => "character",
            Document::Module(_) => "module",
            Document::Pairing(..) => "pairing",
            Document::Presentation(_) => "presentation",
            Document::Instance(_) => "instance",
            Document::Bundle(_) => "bundle",
        }
    }
}

fn vector(v: &[Rat]) -> Vector {
    v.iter().map(format_rat).collect()
}

fn rows(m: &Matrix) -> Rows {
    m.to_rows().iter().map(|r| vector(r)).collect()
}

fn parse_vector(v: &[String]) -> Result<Vec<Rat>> {
    v.iter().map(|s| parse_rat(s)).collect()
}

fn parse_rows(r: &Rows, cols: usize) -> Result<Matrix> {
    let parsed: Vec<Vec<Rat>> = r.iter().map(|row| parse_vector(row)).collect::<Result<_>>()?;
    if parsed.iter().any(|row| row.len() != cols) {
        return Err(Error::Dimension(format!("matrix rows must have {cols} entries")));
    }
    Ok(Matrix::from_rows(parsed, cols))
}

fn square(r: &Rows) -> Result<Matrix> {
    parse_rows(r, r.len())
}

pub fn algebra_doc(t: &FlatAlgebra) -> AlgebraDoc {
    AlgebraDoc {
        prime: t.prime().get(),
        rank: t.rank(),
        constants: t.sparse_constants().into_iter().map(|(i, j, k, c)| (i, j, k, format_rat(&c))).collect(),
        unit: vector(t.unit()),
        eigensystem: t.eigensystem().map(|e| EigensystemDoc {
            values: rows(&e.values),
            generators: e.generators.iter().map(|g| vector(g)).collect(),
        }),
    }
}

pub fn algebra_from_doc(d: &AlgebraDoc) -> Result<FlatAlgebra> {
    let prime = Prime::new(d.prime)?;
    let entries: Vec<(usize, usize, usize, Rat)> =
        d.constants.iter().map(|(i, j, k, c)| Ok((*i, *j, *k, parse_rat(c)?))).collect::<Result<_>>()?;
    let t = FlatAlgebra::from_sparse(prime, d.rank, &entries, parse_vector(&d.unit)?)?;
    match &d.eigensystem {
        None => Ok(t),
        Some(e) => {
            let cols = e.generators.len();
            let values = parse_rows(&e.values, cols)?;
            let generators = e.generators.iter().map(|g| parse_vector(g)).collect::<Result<_>>()?;
            t.with_eigensystem(EigensystemPresentation { values, generators })
        }
    }
}

pub fn module_doc(m: &HeckeModule) -> ModuleDoc {
    ModuleDoc {
        prime: m.basis().prime().get(),
        ambient: m.basis().ambient(),
        basis: m.basis().basis().iter().map(|b| vector(b)).collect(),
        action: m.action().iter().map(rows).collect(),
    }
}

pub fn module_from_doc(d: &ModuleDoc) -> Result<HeckeModule> {
    let prime = Prime::new(d.prime)?;
    let gens: Vec<Vec<Rat>> = d.basis.iter().map(|b| parse_vector(b)).collect::<Result<_>>()?;
    if gens.iter().any(|g| g.len() != d.ambient) {
        return Err(Error::Dimension(format!("module basis vectors must have {} entries", d.ambient)));
    }
    let lattice = Lattice::from_generators(prime, d.ambient, &gens);
    if lattice.rank() != gens.len() {
        return Err(Error::Validation("module basis is linearly dependent".into()));
    }
    let action = d.action.iter().map(square).collect::<Result<_>>()?;
    HeckeModule::new(lattice, action)
}

pub fn pairing_doc(p: &PairingInstance, theta: Option<&ThetaLink>) -> PairingDoc {
    PairingDoc {
        t1: algebra_doc(&p.t1),
        m1: module_doc(&p.m1),
        lambda1: vector(p.lambda1.values()),
        t2: algebra_doc(&p.t2),
        m2: module_doc(&p.m2),
        lambda2: vector(p.lambda2.values()),
        gram: rows(&p.gram),
        theta: theta.map(|t| rows(&t.matrix)),
    }
}

pub fn pairing_from_doc(d: &PairingDoc) -> Result<(PairingInstance, Option<ThetaLink>)> {
    let m1 = module_from_doc(&d.m1)?;
    let m2 = module_from_doc(&d.m2)?;
    let gram = parse_rows(&d.gram, m2.rank())?;
    let t1 = algebra_from_doc(&d.t1)?;
    let t2 = algebra_from_doc(&d.t2)?;
    let theta = d.theta.as_ref().map(|r| parse_rows(r, t1.rank()).map(|matrix| ThetaLink { matrix })).transpose()?;
    let pi = PairingInstance {
        t1,
        m1,
        lambda1: Character::new(parse_vector(&d.lambda1)?),
        t2,
        m2,
        lambda2: Character::new(parse_vector(&d.lambda2)?),
        gram,
    };
    Ok((pi, theta))
}

pub fn presentation_doc(r: &LocalRingPresentation) -> PresentationDoc {
    PresentationDoc {
        prime: r.prime.get(),
        variables: r.num_variables,
        relations: r
            .relations
            .iter()
            .map(|f| f.terms.iter().map(|(e, c)| (e.clone(), format_rat(c))).collect())
            .collect(),
        theta_point: vector(&r.theta_point),
    }
}

pub fn presentation_from_doc(d: &PresentationDoc) -> Result<LocalRingPresentation> {
    let relations = d
        .relations
        .iter()
        .map(|f| Ok(SparsePoly { terms: f.iter().map(|(e, c)| Ok((e.clone(), parse_rat(c)?))).collect::<Result<_>>()? }))
        .collect::<Result<_>>()?;
    let r = LocalRingPresentation {
        prime: Prime::new(d.prime)?,
        num_variables: d.variables,
        relations,
        theta_point: parse_vector(&d.theta_point)?,
    };
    r.validate()?;
    Ok(r)
}

pub fn instance_doc(i: &Instance) -> InstanceDoc {
    InstanceDoc {
        algebra: algebra_doc(&i.algebra),
        character: vector(i.character.values()),
        policy: i.policy,
        modules: i.modules.iter().map(module_doc).collect(),
        extension: i.extension.as_ref().map(|e| ExtensionDoc { kind: e.kind(), modulus: vector(e.modulus()) }),
        presentation: i.presentation.as_ref().map(|(r, _)| presentation_doc(r)),
        images: i.presentation.as_ref().map(|(_, im)| im.iter().map(|v| vector(v)).collect()),
    }
}

pub fn instance_from_doc(d: &InstanceDoc) -> Result<Instance> {
    let algebra = algebra_from_doc(&d.algebra)?;
    let character = Character::new(parse_vector(&d.character)?);
    character.validate(&algebra)?;
    let modules = d.modules.iter().map(module_from_doc).collect::<Result<_>>()?;
    let extension = d
        .extension
        .as_ref()
        .map(|e| Extension::new(algebra.prime(), e.kind, parse_vector(&e.modulus)?))
        .transpose()?;
    let presentation = match (&d.presentation, &d.images) {
        (None, None) => None,
        (Some(r), Some(im)) => {
            let r = presentation_from_doc(r)?;
            let im: Vec<Vec<Rat>> = im.iter().map(|v| parse_vector(v)).collect::<Result<_>>()?;
            Some((r, im))
        }
        _ => return Err(Error::Validation("presentation and images must be given together".into())),
    };
    Ok(Instance { algebra, character, policy: d.policy, modules, extension, presentation })
}

pub fn bundle_doc(b: &Bundle) -> BundleDoc {
    BundleDoc {
        algebra: algebra_doc(&b.pairing.t1),
        character: vector(b.pairing.lambda1.values()),
        module: module_doc(&b.pairing.m1),
        gram: rows(&b.pairing.gram),
        provenance: b.provenance.clone(),
    }
}

pub fn bundle_from_doc(d: &BundleDoc) -> Result<Bundle> {
    let t = algebra_from_doc(&d.algebra)?;
    let m = module_from_doc(&d.module)?;
    let lambda = Character::new(parse_vector(&d.character)?);
    let gram = parse_rows(&d.gram, m.rank())?;
    Ok(Bundle {
        pairing: PairingInstance {
            t1: t.clone(),
            m1: m.clone(),
            lambda1: lambda.clone(),
            t2: t,
            m2: m,
            lambda2: lambda,
            gram,
        },
        provenance: d.provenance.clone(),
    })
}

fn body_of(doc: &Document) -> Result<serde_json::Value> {
    Ok(match doc {
        Document::Algebra(t) => serde_json::to_value(algebra_doc(t))?,
        Document::Character(c) => serde_json::to_value(vector(c.values()))?,
        Document::Module(m) => serde_json::to_value(module_doc(m))?,
        Document::Pairing(p, theta) => serde_json::to_value(pairing_doc(p, theta.as_ref()))?,
        Document::Presentation(r) => serde_json::to_value(presentation_doc(r))?,
        Document::Instance(i) => serde_json::to_value(instance_doc(i))?,
        Document::Bundle(b) => serde_json::to_value(bundle_doc(b))?,
    })
}

/// Pretty-printed document text, terminated by a newline.
pub fn to_string(doc: &Document) -> String {
    let env = Envelope {
        format: FORMAT.into(),
        version: VERSION,
        kind: doc.kind().into(),
        body: body_of(doc).expect("documents serialize"),
    };
    let mut s = serde_json::to_string_pretty(&env).expect("documents serialize");
    s.push('\n');
    s
}

fn body<T: DeserializeOwned>(v: serde_json::Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))
}

/// Parses and validates a document.
pub fn parse(text: &str) -> Result<Document> {
    let env: Envelope = serde_json::from_str(text)?;
    if env.format != FORMAT {
        return Err(Error::Parse(format!("unknown document format {:?}", env.format)));
    }
    if env.version != VERSION {
        return Err(Error::Parse(format!("unsupported document version {}", env.version)));
    }
    Ok(match env.kind.as_str() {
        "algebra" => Document::Algebra(algebra_from_doc(&body(env.body)?)?),
        "character" => Document::Character(Character::new(parse_vector(&body::<Vector>(env.body)?)?)),
        "module" => Document::Module(module_from_doc(&body(env.body)?)?),
        "pairing" => {
            let (p, theta) = pairing_from_doc(&body(env.body)?)?;
            Document::Pairing(p, theta)
        }
        "presentation" => Document::Presentation(presentation_from_doc(&body(env.body)?)?),
        "instance" => Document::Instance(Box::new(instance_from_doc(&body(env.body)?)?)),
        "bundle" => Document::Bundle(Box::new(bundle_from_doc(&body(env.body)?)?)),
        other => return Err(Error::Parse(format!("unknown document kind {other:?}"))),
    })
}

pub fn read(path: &std::path::Path) -> Result<Document> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{fiber_product_presentation, free_presentation};
    use crate::duality::{construct_dual_pair, negative_control_pair};

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn round_trip(doc: Document) {
        let text = to_string(&doc);
        let back = parse(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn every_kind_round_trips() {
        let (t, chars) = FlatAlgebra::fiber_product(p(5), 3);
        round_trip(Document::Algebra(t.clone()));
        round_trip(Document::Character(chars[0].clone()));
        round_trip(Document::Module(HeckeModule::regular(&t)));
        let (pi, theta) = construct_dual_pair(&t, &chars[0], 7, LocalityPolicy::Strict).unwrap();
        round_trip(Document::Pairing(pi, Some(theta)));
        round_trip(Document::Pairing(negative_control_pair(p(3), 2), None));
        round_trip(Document::Presentation(fiber_product_presentation(p(5), 2)));
        let (r, images) = free_presentation(&t, &chars, &[t.basis_vector(1)], &chars[0], &[1]);
        let mut inst = Instance::new(t.clone(), chars[0].clone());
        inst.modules.push(HeckeModule::character_line(&t, &chars[1]));
        inst.extension = Some(Extension::new(p(5), ExtensionKind::TotallyRamified, vec![crate::dvr::rat(5), crate::dvr::rat(0)]).unwrap());
        inst.presentation = Some((r, images));
        round_trip(Document::Instance(Box::new(inst)));
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        let (t, _) = FlatAlgebra::fiber_product(p(5), 1);
        let text = to_string(&Document::Algebra(t));
        let extra = text.replacen("\"rank\"", "\"colour\": 1,\n    \"rank\"", 1);
        assert!(matches!(parse(&extra), Err(Error::Parse(_))));
        let v2 = text.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(parse(&v2), Err(Error::Parse(_))));
        assert!(matches!(parse("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_invalid_structure() {
        let (t, _) = FlatAlgebra::fiber_product(p(5), 1);
        let text = to_string(&Document::Algebra(t));
        let bad_rank = text.replacen("\"rank\": 2", "\"rank\": 3", 1);
        assert!(parse(&bad_rank).unwrap_err().exit_code() == 3);
    }
}
