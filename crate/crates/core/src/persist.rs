//! File output helpers shared by every artifact writer.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

/// Serializers that print `f64` with 17 significant digits (`{:.16e}`),
/// enough to round-trip every finite double exactly.
pub mod fmt17 {
    use serde::ser::{SerializeSeq, Serializer};
    use serde::Serialize;
    use serde_json::value::RawValue;

    pub fn format(x: f64) -> String {
        format!("{x:.16e}")
    }

    fn raw<E: serde::ser::Error>(x: f64) -> std::result::Result<Box<RawValue>, E> {
        if !x.is_finite() {
            return Err(E::custom(format!("cannot serialize non-finite value {x}")));
        }
        RawValue::from_string(format(x)).map_err(E::custom)
    }

    pub fn f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        raw::<S::Error>(*x)?.serialize(s)
    }

    pub fn vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for &x in xs {
            seq.serialize_element(&raw::<S::Error>(x)?)?;
        }
        seq.end()
    }

    pub fn opt_vec<S: Serializer>(xs: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
        match xs {
            Some(v) => vec(v, s),
            None => s.serialize_none(),
        }
    }
}
