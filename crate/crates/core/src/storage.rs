//! Binary file formats. Every integer and float is little-endian; strings
//! are a `u32` byte length followed by UTF-8. Readers check magic and
//! version before touching the payload and reject trailing bytes.
//!
//! Embedding dataset (`LVPE`):
//!
//! ```text
//! magic "LVPE" | version u32 | dim u32 | record_count u64 | flags u32 | namespace str
//! record_count × ( local_id u32 | domain_id u32 (0xFFFFFFFF = none) | dim × f32 )
//! ```
//!
//! Pool (`LVPP`):
//!
//! ```text
//! magic "LVPP" | version u32 | dim u32 | class_count u32
//! class_count × ( namespace str | local_id u32 | display_name str | entry_count u32
//!                 entry_count × ( modality u8 | domain_id u32 | sample_count u64 | dim × f32 ) )
//! ```
//!
//! Mixing parameters (`LVPA`, stored as `f32`) and linear heads (`LVPC`,
//! stored as `f64`):
//!
//! ```text
//! magic "LVPA" | version u32 | set_count u32
//! set_count × ( dim u32 | task_index u32 | class_count u32
//!               class_count × ( namespace str | local_id u32 | dim × f32 alpha | dim × f32 beta ) )
//!
//! magic "LVPC" | version u32 | dim u32 | class_count u32
//! class_count × ( namespace str | local_id u32 | bias f64 | dim × f64 weights )
//! ```
//!
//! Files are written to a temporary file in the target directory and renamed
//! into place.

use std::io::Write;
use std::path::Path;

use crate::error::{LvpError, Result};
use crate::it_trainer::{ITParams, Mixing};
use crate::linear_head::LinearClassifier;
use crate::types::{ClassId, Embedding, EvalReport, LabelVector, Modality, Pool, Record};

pub const FORMAT_VERSION: u32 = 1;
pub const NO_DOMAIN: u32 = 0xFFFF_FFFF;
pub const FLAG_NORMALIZED: u32 = 1;

const EMBEDDINGS_MAGIC: [u8; 4] = *b"LVPE";
const POOL_MAGIC: [u8; 4] = *b"LVPP";
const PARAMS_MAGIC: [u8; 4] = *b"LVPA";
const HEAD_MAGIC: [u8; 4] = *b"LVPC";

/// A dataset of embeddings sharing one namespace.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    pub namespace: String,
    pub dim: usize,
    /// Vectors were L2-normalized at export.
    pub normalized: bool,
    pub records: Vec<Record>,
}

impl EmbeddingSet {
    pub fn new(namespace: impl Into<String>, dim: usize, normalized: bool) -> Self {
        EmbeddingSet {
            namespace: namespace.into(),
            dim,
            normalized,
            records: Vec::new(),
        }
    }

    /// Byte length of the encoded file.
    pub fn encoded_len(&self) -> usize {
        embedding_file_len(self.namespace.len(), self.dim, self.records.len())
    }
}

/// Byte length of an `LVPE` file with the given shape.
pub fn embedding_file_len(namespace_bytes: usize, dim: usize, records: usize) -> usize {
    // magic, version, dim, count, flags, namespace length prefix
    let header = 4 + 4 + 4 + 8 + 4 + 4 + namespace_bytes;
    header + records * (8 + 4 * dim)
}

struct Writer(Vec<u8>);

impl Writer {
    fn new(magic: [u8; 4]) -> Self {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(&magic);
        w.u32(FORMAT_VERSION);
        w
    }

    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f32s(&mut self, vs: &[f32]) {
        for v in vs {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }

    fn f64s(&mut self, vs: &[f64]) {
        for v in vs {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }

    fn str(&mut self, s: &str) -> Result<()> {
        self.u32(to_u32(s.len(), "string length")?);
        self.0.extend_from_slice(s.as_bytes());
        Ok(())
    }

    fn domain(&mut self, d: Option<u32>) -> Result<()> {
        match d {
            Some(NO_DOMAIN) => Err(LvpError::Malformed(format!(
                "domain id {NO_DOMAIN:#x} is reserved"
            ))),
            Some(d) => {
                self.u32(d);
                Ok(())
            }
            None => {
                self.u32(NO_DOMAIN);
                Ok(())
            }
        }
    }
}

fn to_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| LvpError::Malformed(format!("{what} {n} exceeds u32")))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(buf: &'a [u8], magic: [u8; 4]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        let found: [u8; 4] = r.take(4, "magic")?.try_into().expect("4 bytes");
        if found != magic {
            return Err(LvpError::BadMagic {
                expected: magic,
                found,
            });
        }
        let version = r.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(LvpError::UnsupportedVersion {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(r)
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(LvpError::Truncated(what))?;
        if end > self.buf.len() {
            return Err(LvpError::Truncated(what));
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f32s(&mut self, n: usize, what: &'static str) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or(LvpError::Truncated(what))?, what)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }

    fn f64s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or(LvpError::Truncated(what))?, what)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn str(&mut self, what: &'static str) -> Result<String> {
        let n = self.u32(what)? as usize;
        let bytes = self.take(n, what)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| LvpError::Malformed(format!("{what} is not valid UTF-8")))
    }

    fn domain(&mut self) -> Result<Option<u32>> {
        let d = self.u32("domain id")?;
        Ok((d != NO_DOMAIN).then_some(d))
    }

    fn dim(&mut self) -> Result<usize> {
        match self.u32("dimension")? {
            0 => Err(LvpError::ZeroDimension),
            d => Ok(d as usize),
        }
    }

    fn finish(self) -> Result<()> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(LvpError::TrailingBytes(n)),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| LvpError::io(path, e))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| LvpError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| LvpError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| LvpError::io(path, e))?;
    tmp.persist(path).map_err(|e| LvpError::io(path, e.error))?;
    Ok(())
}

pub fn encode_embeddings(set: &EmbeddingSet) -> Result<Vec<u8>> {
    let mut w = Writer::new(EMBEDDINGS_MAGIC);
    w.u32(to_u32(set.dim, "dimension")?);
    w.u64(set.records.len() as u64);
    w.u32(if set.normalized { FLAG_NORMALIZED } else { 0 });
    w.str(&set.namespace)?;
    for r in &set.records {
        if r.class.namespace != set.namespace {
            return Err(LvpError::Malformed(format!(
                "record class {} outside dataset namespace '{}'",
                r.class, set.namespace
            )));
        }
        r.embedding.check_dim(set.dim)?;
        w.u32(r.class.local_id);
        w.domain(r.domain_id)?;
        w.f32s(&r.embedding);
    }
    Ok(w.0)
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingSet> {
    let mut r = Reader::open(bytes, EMBEDDINGS_MAGIC)?;
    let dim = r.dim()?;
    let count = r.u64("record count")?;
    let flags = r.u32("flags")?;
    let namespace = r.str("namespace")?;
    let per_record = 8 + 4 * dim as u64;
    let remaining = (bytes.len() - r.pos) as u64;
    if count.checked_mul(per_record).is_none_or(|need| need > remaining) {
        return Err(LvpError::Truncated("records"));
    }
    let mut records = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let local = r.u32("class id")?;
        let domain = r.domain()?;
        let values = r.f32s(dim, "embedding")?;
        records.push(Record::new(
            Embedding::new(values)?,
            ClassId::new(namespace.clone(), local),
            domain,
        ));
    }
    r.finish()?;
    Ok(EmbeddingSet {
        namespace,
        dim,
        normalized: flags & FLAG_NORMALIZED != 0,
        records,
    })
}

pub fn write_embeddings(path: impl AsRef<Path>, set: &EmbeddingSet) -> Result<()> {
    write_atomic(path.as_ref(), &encode_embeddings(set)?)
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    decode_embeddings(&read_file(path.as_ref())?)
}

pub fn encode_pool(pool: &Pool) -> Result<Vec<u8>> {
    let mut w = Writer::new(POOL_MAGIC);
    w.u32(to_u32(pool.dim(), "dimension")?);
    w.u32(to_u32(pool.num_classes(), "class count")?);
    for (class, entries) in pool.entries() {
        w.str(&class.namespace)?;
        w.u32(class.local_id);
        w.str(pool.name(class).unwrap_or(""))?;
        w.u32(to_u32(entries.len(), "entry count")?);
        for lv in entries {
            w.u8(lv.modality.code());
            w.domain(lv.domain_id)?;
            w.u64(lv.sample_count);
            w.f32s(&lv.vector);
        }
    }
    Ok(w.0)
}

pub fn decode_pool(bytes: &[u8]) -> Result<Pool> {
    let mut r = Reader::open(bytes, POOL_MAGIC)?;
    let dim = r.dim()?;
    let classes = r.u32("class count")?;
    let mut pool = Pool::new(dim)?;
    for _ in 0..classes {
        let ns = r.str("namespace")?;
        let local = r.u32("class id")?;
        let class = ClassId::new(ns, local);
        let name = r.str("display name")?;
        let n = r.u32("entry count")?;
        if n == 0 {
            return Err(LvpError::EmptyClassEntry(class));
        }
        if pool.contains(&class) {
            return Err(LvpError::Malformed(format!("class {class} listed twice")));
        }
        let mut entries = Vec::with_capacity(n.min(1 << 16) as usize);
        for _ in 0..n {
            let code = r.u8("modality")?;
            let modality = Modality::from_code(code)
                .ok_or_else(|| LvpError::Malformed(format!("unknown modality {code}")))?;
            let domain = r.domain()?;
            let count = r.u64("sample count")?;
            let v = Embedding::new(r.f32s(dim, "label vector")?)?;
            entries.push(LabelVector::new(v, class.clone(), domain, modality, count)?);
        }
        pool.insert_class(class.clone(), entries)?;
        if !name.is_empty() {
            pool.set_name(class, name);
        }
    }
    r.finish()?;
    Ok(pool)
}

pub fn write_pool(path: impl AsRef<Path>, pool: &Pool) -> Result<()> {
    write_atomic(path.as_ref(), &encode_pool(pool)?)
}

pub fn read_pool(path: impl AsRef<Path>) -> Result<Pool> {
    decode_pool(&read_file(path.as_ref())?)
}

/// Number of `f32` label-vector values an encoded pool carries.
pub fn pool_payload_floats(bytes: &[u8]) -> Result<usize> {
    let pool = decode_pool(bytes)?;
    Ok(pool.vectors().map(|lv| lv.vector.dim()).sum())
}

/// `LVPA`: dim u32 | task_index u32 | class_count u32 |
/// per class ( namespace str | local_id u32 | α dim×f32 | β dim×f32 ).
pub fn encode_params(params: &[ITParams]) -> Result<Vec<u8>> {
    let mut w = Writer::new(PARAMS_MAGIC);
    w.u32(to_u32(params.len(), "parameter set count")?);
    for p in params {
        w.u32(to_u32(p.dim, "dimension")?);
        w.u32(to_u32(p.task_index, "task index")?);
        w.u32(to_u32(p.per_class.len(), "class count")?);
        for (class, m) in &p.per_class {
            w.str(&class.namespace)?;
            w.u32(class.local_id);
            let a: Vec<f32> = m.alpha.iter().map(|&x| x as f32).collect();
            let b: Vec<f32> = m.beta.iter().map(|&x| x as f32).collect();
            w.f32s(&a);
            w.f32s(&b);
        }
    }
    Ok(w.0)
}

pub fn decode_params(bytes: &[u8]) -> Result<Vec<ITParams>> {
    let mut r = Reader::open(bytes, PARAMS_MAGIC)?;
    let sets = r.u32("parameter set count")?;
    let mut out = Vec::new();
    for _ in 0..sets {
        let dim = r.dim()?;
        let task_index = r.u32("task index")? as usize;
        let classes = r.u32("class count")?;
        let mut p = ITParams {
            task_index,
            dim,
            per_class: Default::default(),
        };
        for _ in 0..classes {
            let ns = r.str("namespace")?;
            let local = r.u32("class id")?;
            let widen = |v: Vec<f32>| v.into_iter().map(f64::from).collect::<Vec<f64>>();
            let alpha = widen(r.f32s(dim, "alpha")?);
            let beta = widen(r.f32s(dim, "beta")?);
            if let Some(i) = alpha.iter().chain(&beta).position(|x| !x.is_finite()) {
                return Err(LvpError::NonFinite { index: i });
            }
            p.per_class.insert(ClassId::new(ns, local), Mixing { alpha, beta });
        }
        out.push(p);
    }
    r.finish()?;
    Ok(out)
}

pub fn write_params(path: impl AsRef<Path>, params: &[ITParams]) -> Result<()> {
    write_atomic(path.as_ref(), &encode_params(params)?)
}

pub fn read_params(path: impl AsRef<Path>) -> Result<Vec<ITParams>> {
    decode_params(&read_file(path.as_ref())?)
}

/// Stored at full precision so a reloaded head predicts identically.
pub fn encode_head(head: &LinearClassifier) -> Result<Vec<u8>> {
    let mut w = Writer::new(HEAD_MAGIC);
    w.u32(to_u32(head.dim, "dimension")?);
    w.u32(to_u32(head.num_classes(), "class count")?);
    for (k, class) in head.class_order.iter().enumerate() {
        w.str(&class.namespace)?;
        w.u32(class.local_id);
        w.f64s(&[head.bias[k]]);
        w.f64s(head.row(k));
    }
    Ok(w.0)
}

pub fn decode_head(bytes: &[u8]) -> Result<LinearClassifier> {
    let mut r = Reader::open(bytes, HEAD_MAGIC)?;
    let dim = r.dim()?;
    let classes = r.u32("class count")? as usize;
    let mut head = LinearClassifier::zeros(Vec::new(), dim);
    for _ in 0..classes {
        let ns = r.str("namespace")?;
        let local = r.u32("class id")?;
        head.class_order.push(ClassId::new(ns, local));
        head.bias.extend(r.f64s(1, "bias")?);
        head.weights.extend(r.f64s(dim, "weights")?);
    }
    r.finish()?;
    if !head.is_finite() {
        return Err(LvpError::Malformed("non-finite head parameter".into()));
    }
    if head.class_order.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LvpError::Malformed("head classes must be strictly increasing".into()));
    }
    Ok(head)
}

pub fn write_head(path: impl AsRef<Path>, head: &LinearClassifier) -> Result<()> {
    write_atomic(path.as_ref(), &encode_head(head)?)
}

pub fn read_head(path: impl AsRef<Path>) -> Result<LinearClassifier> {
    decode_head(&read_file(path.as_ref())?)
}

/// Pretty JSON; absent accuracies are `null`.
pub fn write_report(report: &EvalReport) -> String {
    serde_json::to_string_pretty(report).expect("report is always serializable")
}

pub fn parse_report(text: &str) -> Result<EvalReport> {
    let report: EvalReport = serde_json::from_str(text)?;
    if !report.is_consistent() {
        return Err(LvpError::Malformed(
            "report averages do not match its accuracy matrix".into(),
        ));
    }
    Ok(report)
}

pub fn write_report_file(path: impl AsRef<Path>, report: &EvalReport) -> Result<()> {
    let mut text = write_report(report);
    text.push('\n');
    write_atomic(path.as_ref(), text.as_bytes())
}

pub fn read_report_file(path: impl AsRef<Path>) -> Result<EvalReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| LvpError::io(path, e))?;
    parse_report(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn set_with(records: Vec<(u32, Option<u32>, Vec<f32>)>) -> EmbeddingSet {
        let dim = records.first().map_or(3, |r| r.2.len());
        let mut s = EmbeddingSet::new("ds", dim, false);
        for (c, d, v) in records {
            s.records.push(Record::new(Embedding::new(v).unwrap(), ClassId::new("ds", c), d));
        }
        s
    }

    #[test]
    fn empty_dataset_round_trips() {
        let s = EmbeddingSet::new("empty", 4, true);
        let bytes = encode_embeddings(&s).unwrap();
        assert_eq!(bytes.len(), s.encoded_len());
        assert_eq!(decode_embeddings(&bytes).unwrap(), s);
    }

    #[test]
    fn records_round_trip() {
        let s = set_with(vec![
            (0, None, vec![1.0, -0.0, 3.5]),
            (7, Some(2), vec![f32::MIN_POSITIVE, f32::MAX, -1e-30]),
        ]);
        let bytes = encode_embeddings(&s).unwrap();
        let back = decode_embeddings(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(encode_embeddings(&back).unwrap(), bytes);
        assert_eq!(back.records[0].embedding[1].to_bits(), (-0.0f32).to_bits());
    }

    #[test]
    fn cifar_shaped_length() {
        // 50,000 records of 8 + 768 * 4 bytes each, plus a 36-byte header
        assert_eq!(embedding_file_len(8, 768, 50_000), 36 + 154_000_000);
        let s = set_with(vec![(0, None, vec![0.0; 768]), (1, Some(0), vec![1.0; 768])]);
        assert_eq!(encode_embeddings(&s).unwrap().len(), embedding_file_len(2, 768, 2));
    }

    #[test]
    fn named_errors() {
        let s = set_with(vec![(1, None, vec![0.5, 0.5])]);
        let good = encode_embeddings(&s).unwrap();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode_embeddings(&bad_magic), Err(LvpError::BadMagic { .. })));

        let mut bad_version = good.clone();
        bad_version[4] = 9;
        match decode_embeddings(&bad_version) {
            Err(LvpError::UnsupportedVersion { found: 9, expected: 1 }) => {}
            other => panic!("{other:?}"),
        }

        assert!(matches!(
            decode_embeddings(&good[..good.len() - 1]),
            Err(LvpError::Truncated(_))
        ));

        let mut trailing = good.clone();
        trailing.push(0);
        assert!(matches!(decode_embeddings(&trailing), Err(LvpError::TrailingBytes(1))));

        let mut nan = good.clone();
        let n = nan.len();
        nan[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_embeddings(&nan), Err(LvpError::NonFinite { .. })));

        // pool decoder rejects a dataset file
        assert!(matches!(decode_pool(&good), Err(LvpError::BadMagic { .. })));
    }

    #[test]
    fn foreign_namespace_rejected_on_write() {
        let mut s = set_with(vec![(1, None, vec![0.5])]);
        s.records[0].class.namespace = "other".into();
        assert!(encode_embeddings(&s).is_err());
    }

    #[test]
    fn pool_round_trip_with_names_and_modalities() {
        let mut p = Pool::new(2).unwrap();
        let c = ClassId::new("a", 3);
        p.push(LabelVector::new(Embedding::new(vec![1.0, 2.0]).unwrap(), c.clone(), Some(4), Modality::ImageMean, 12).unwrap()).unwrap();
        p.push(LabelVector::text(Embedding::new(vec![0.1, 0.2]).unwrap(), c.clone())).unwrap();
        p.set_name(c.clone(), "apple");
        let d = ClassId::new("b", 0);
        p.push(LabelVector::new(Embedding::new(vec![-1.0, 0.0]).unwrap(), d, None, Modality::MixedIt, 5).unwrap()).unwrap();
        let bytes = encode_pool(&p).unwrap();
        let back = decode_pool(&bytes).unwrap();
        assert_eq!(back, p);
        assert_eq!(encode_pool(&back).unwrap(), bytes);
        assert_eq!(pool_payload_floats(&bytes).unwrap(), p.memory_floats());
    }

    #[test]
    fn pool_with_empty_class_rejected() {
        let mut w = Writer::new(POOL_MAGIC);
        w.u32(1);
        w.u32(1);
        w.str("x").unwrap();
        w.u32(0);
        w.str("").unwrap();
        w.u32(0);
        assert!(matches!(decode_pool(&w.0), Err(LvpError::EmptyClassEntry(_))));
    }

    #[test]
    fn params_and_head_round_trip() {
        let mut per_class = BTreeMap::new();
        per_class.insert(ClassId::new("a", 1), Mixing { alpha: vec![0.5, 0.25], beta: vec![1.0, 2.0] });
        let params = vec![ITParams { task_index: 3, dim: 2, per_class }];
        assert_eq!(decode_params(&encode_params(&params).unwrap()).unwrap(), params);

        let mut head = LinearClassifier::zeros(vec![ClassId::new("a", 0), ClassId::new("a", 1)], 2);
        head.weights = vec![0.1, -0.2, 0.3, 1e-300];
        head.bias = vec![0.7, -0.7];
        assert_eq!(decode_head(&encode_head(&head).unwrap()).unwrap(), head);
    }

    #[test]
    fn report_round_trip() {
        let mut meta = BTreeMap::new();
        meta.insert("seed".to_string(), "7".to_string());
        let r = EvalReport::new(vec![vec![Some(0.1 + 0.2), None], vec![Some(1.0 / 3.0), Some(0.5)]], vec![3, 4], meta);
        let text = write_report(&r);
        let back = parse_report(&text).unwrap();
        assert_eq!(back, r);
        let mut tampered = r.clone();
        tampered.final_average = 0.9;
        assert!(parse_report(&write_report(&tampered)).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.lvpe");
        let s = set_with(vec![(1, None, vec![0.5])]);
        write_embeddings(&path, &s).unwrap();
        write_embeddings(&path, &s).unwrap();
        assert_eq!(read_embeddings(&path).unwrap(), s);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(matches!(read_pool(dir.path().join("missing")), Err(LvpError::Io { .. })));
    }
}
