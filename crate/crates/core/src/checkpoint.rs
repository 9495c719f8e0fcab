//! Plain-text weight checkpoints.
//!
//! ```text
//! PCRNN 1
//! <vocab> <hidden>
//! <w_ih row-major> <b_h> <w_ho row-major> <b_o>
//! ```
//!
//! Values are written one per line in the shortest decimal form that parses
//! back to the identical `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::network::{Dimensions, NetworkParams};

pub const MAGIC: &str = "PCRNN 1";

pub fn to_text(params: &NetworkParams) -> String {
    let mut s = String::with_capacity(24 * params.parameter_count() + 32);
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "{} {}", params.dims.vocab, params.dims.hidden);
    for v in params.values() {
        let _ = writeln!(s, "{v}");
    }
    s
}

pub fn from_text(text: &str, path: &Path) -> Result<NetworkParams> {
    let bad = |msg: String| Error::Parse {
        what: "checkpoint",
        path: path.to_path_buf(),
        msg,
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(MAGIC) {
        return Err(bad(format!("missing {MAGIC:?} header")));
    }
    let dims_line = lines.next().ok_or_else(|| bad("missing dimensions line".into()))?;
    let dims: Vec<usize> = dims_line
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| bad(format!("bad dimensions line {dims_line:?}: {e}")))?;
    let [vocab, hidden] = dims[..] else {
        return Err(bad(format!("bad dimensions line {dims_line:?}")));
    };
    let dims = Dimensions::new(vocab, hidden);
    dims.validate().map_err(|e| bad(e.to_string()))?;

    let mut params = NetworkParams::zeros(dims);
    let expected = params.parameter_count();
    let mut values = lines.flat_map(str::split_whitespace).map(|t| {
        t.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(format!("bad value {t:?}")))
    });
    let mut read = 0;
    for buf in [&mut params.w_ih, &mut params.b_h, &mut params.w_ho, &mut params.b_o] {
        for slot in buf.iter_mut() {
            *slot = values
                .next()
                .ok_or_else(|| bad(format!("expected {expected} values, found {read}")))??;
            read += 1;
        }
    }
    if values.next().is_some() {
        return Err(bad(format!("more than {expected} values")));
    }
    Ok(params)
}

pub fn save(params: &NetworkParams, path: &Path) -> Result<()> {
    fs::write(path, to_text(params)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<NetworkParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text, path)
}
