//! Problem descriptors: `qp:seed=1,p=2,n=5,m=3`, `lrr:seed=7,d=40,n=40,lambda=1e3,mu=1e4,gamma=1e4`,
//! `manifest:path/to/manifest.json`, or a bare path ending in `.json`.

use std::collections::BTreeMap;
use std::path::Path;

use vmor::prox::{gen_qp, load_manifest, random_lrr, LrrInstance, ManifestInstance, QpInstance};

use crate::config::ConfigError;

pub enum Problem {
    Qp(QpInstance),
    Lrr(LrrInstance),
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::Qp(_) => "qp",
            Problem::Lrr(_) => "lrr",
        }
    }
}

struct Params {
    kind: String,
    map: BTreeMap<String, String>,
}

impl Params {
    fn take<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError(format!("{}: cannot parse {key} = {v:?}", self.kind))),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.map.keys().next() {
            None => Ok(()),
            Some(k) => Err(ConfigError(format!("{}: unknown parameter {k:?}", self.kind))),
        }
    }
}

fn split(desc: &str) -> Result<Params, ConfigError> {
    let (kind, rest) = desc.split_once(':').unwrap_or((desc, ""));
    let mut map = BTreeMap::new();
    for kv in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("{kind}: expected key=value, got {kv:?}")))?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(ConfigError(format!("{kind}: {k} given twice")));
        }
    }
    Ok(Params { kind: kind.to_string(), map })
}

/// Builds the instance a descriptor names; `seed` is used when the descriptor has none.
pub fn build_problem(desc: &str, seed: u64) -> Result<Problem, ConfigError> {
    let err = |e: vmor::prox::ProxError| ConfigError(format!("{desc}: {e}"));
    if let Some(path) = desc.strip_prefix("manifest:") {
        return from_manifest(Path::new(path));
    }
    if desc.ends_with(".json") {
        return from_manifest(Path::new(desc));
    }
    let mut p = split(desc)?;
    match p.kind.as_str() {
        "qp" => {
            let seed = p.take("seed", seed)?;
            let blocks = p.take("p", 2usize)?;
            let n = p.take("n", 5usize)?;
            let m = p.take("m", 3usize)?;
            p.finish()?;
            if blocks * n > 2000 {
                return Err(ConfigError(format!("qp: {} unknowns is beyond the dense desk scale", blocks * n)));
            }
            Ok(Problem::Qp(gen_qp(seed, blocks, n, m).map_err(err)?))
        }
        "lrr" => {
            let seed = p.take("seed", seed)?;
            let d = p.take("d", 40usize)?;
            let n = p.take("n", 40usize)?;
            let lambda = p.take("lambda", 1e3)?;
            let mu = p.take("mu", 1e4)?;
            let gamma = p.take("gamma", 1e4)?;
            p.finish()?;
            if d.max(n) > 200 || d.min(n) < 2 {
                return Err(ConfigError(format!("lrr: need 2 <= d, n <= 200, got d = {d}, n = {n}")));
            }
            Ok(Problem::Lrr(random_lrr(seed, d, n, lambda, mu, gamma).map_err(err)?))
        }
        other => Err(ConfigError(format!("unknown problem kind {other:?}; expected qp, lrr or manifest"))),
    }
}

fn from_manifest(path: &Path) -> Result<Problem, ConfigError> {
    match load_manifest(path).map_err(|e| ConfigError(e.to_string()))? {
        ManifestInstance::Qp(q) => Ok(Problem::Qp(q)),
        ManifestInstance::Lrr(l) => Ok(Problem::Lrr(l)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors_parse() {
        let Problem::Qp(q) = build_problem("qp:seed=1,p=2,n=5,m=3", 0).unwrap() else { panic!() };
        assert_eq!((q.primal_dim(), q.dual_dim()), (10, 3));
        let Problem::Lrr(l) = build_problem("lrr:seed=3,d=4,n=5", 0).unwrap() else { panic!() };
        assert_eq!(l.x.shape(), (4, 5));
        for bad in ["qp:p=x", "qp:q=1", "qp:p=1,p=2", "cone:n=1", "qp:seed", "lrr:d=1"] {
            assert!(build_problem(bad, 0).is_err(), "{bad}");
        }
    }

    #[test]
    fn seed_fallback() {
        let Problem::Qp(a) = build_problem("qp:p=1,n=3,m=1", 5).unwrap() else { panic!() };
        let Problem::Qp(b) = build_problem("qp:seed=5,p=1,n=3,m=1", 9).unwrap() else { panic!() };
        assert_eq!(a.b, b.b);
    }
}
