use std::cmp::Ordering;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{Frame, FrameStream, Rational, StreamSource, VideoError};

/// Splits the P5 header tokens (magic, width, height, maxval) off the front of
/// `bytes`, skipping `#` comments. Returns the tokens and the payload offset.
fn header_tokens(bytes: &[u8]) -> Option<([&[u8]; 4], usize)> {
    let mut tokens: [&[u8]; 4] = [&[]; 4];
    let mut pos = 0;
    for slot in tokens.iter_mut() {
        loop {
            match bytes.get(pos)? {
                b'#' => {
                    while *bytes.get(pos)? != b'\n' {
                        pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|c| !c.is_ascii_whitespace()) {
            pos += 1;
        }
        *slot = &bytes[start..pos];
    }
    // exactly one whitespace byte separates maxval from the raster
    bytes.get(pos)?.is_ascii_whitespace().then_some((tokens, pos + 1))
}

fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<Frame, VideoError> {
    let (tokens, offset) = header_tokens(bytes).ok_or_else(|| VideoError::Format {
        path: path.to_path_buf(),
        expected: "binary PGM (P5)",
    })?;
    if tokens[0] != b"P5" {
        return Err(VideoError::Format {
            path: path.to_path_buf(),
            expected: "binary PGM (P5)",
        });
    }
    let number = |tok: &[u8], what: &str| {
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| VideoError::Header {
                path: path.to_path_buf(),
                reason: format!("invalid {what}"),
            })
    };
    let width = number(tokens[1], "width")?;
    let height = number(tokens[2], "height")?;
    let maxval = number(tokens[3], "maxval")?;
    if maxval != 255 {
        return Err(VideoError::Unsupported {
            path: path.to_path_buf(),
            what: format!("maxval {maxval} (only 255)"),
        });
    }
    let payload = &bytes[offset..];
    if payload.len() < width * height {
        return Err(VideoError::Truncated {
            path: path.to_path_buf(),
            index: 0,
        });
    }
    Frame::new(width, height, payload[..width * height].to_vec(), 0)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Frame, VideoError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| VideoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_pgm(path, &bytes)
}

/// Writes a binary P5 file with maxval 255.
pub fn write_pgm(frame: &Frame, path: impl AsRef<Path>) -> Result<(), VideoError> {
    let path = path.as_ref();
    let write_err = |source| VideoError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut bytes = Vec::with_capacity(frame.pixels().len() + 20);
    write!(bytes, "P5\n{} {}\n255\n", frame.width(), frame.height()).map_err(write_err)?;
    bytes.extend_from_slice(frame.pixels());
    fs::write(path, bytes).map_err(write_err)
}

/// Shell-style wildcard match supporting `*` and `?`.
fn wildcard_match(pattern: &[u8], name: &[u8]) -> bool {
    let (mut p, mut n) = (0, 0);
    let mut backtrack: Option<(usize, usize)> = None;
    while n < name.len() {
        match pattern.get(p) {
            Some(b'*') => {
                backtrack = Some((p, n));
                p += 1;
            }
            Some(&c) if c == b'?' || c == name[n] => {
                p += 1;
                n += 1;
            }
            _ => match backtrack {
                Some((bp, bn)) => {
                    p = bp + 1;
                    n = bn + 1;
                    backtrack = Some((bp, bn + 1));
                }
                None => return false,
            },
        }
    }
    pattern[p..].iter().all(|&c| c == b'*')
}

/// Orders strings so embedded digit runs compare numerically (`f2` < `f10`).
pub(crate) fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a.as_bytes(), b.as_bytes());
    loop {
        match (a.first(), b.first()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let da = a.iter().take_while(|c| c.is_ascii_digit()).count();
                let db = b.iter().take_while(|c| c.is_ascii_digit()).count();
                let (na, nb) = (&a[..da], &b[..db]);
                let ta = trim_zeros(na);
                let tb = trim_zeros(nb);
                let ord = ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb)).then(da.cmp(&db));
                if ord != Ordering::Equal {
                    return ord;
                }
                a = &a[da..];
                b = &b[db..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(y);
                }
                a = &a[1..];
                b = &b[1..];
            }
        }
    }
}

fn trim_zeros(digits: &[u8]) -> &[u8] {
    let zeros = digits.iter().take_while(|&&c| c == b'0').count();
    &digits[zeros.min(digits.len().saturating_sub(1))..]
}

/// Reads every file in `dir` whose name matches `pattern` as one frame of a
/// stream, in natural filename order.
pub fn read_pgm_sequence(
    dir: impl AsRef<Path>,
    pattern: &str,
    fps: Option<Rational>,
) -> Result<FrameStream, VideoError> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|source| VideoError::Read {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<(String, PathBuf)> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            wildcard_match(pattern.as_bytes(), name.as_bytes()).then(|| (name, e.path()))
        })
        .collect();
    if files.is_empty() {
        return Err(VideoError::NotFound {
            dir: dir.to_path_buf(),
            pattern: pattern.to_string(),
        });
    }
    files.sort_by(|a, b| natural_cmp(&a.0, &b.0));
    let first = read_pgm(&files[0].1)?;
    let dims = (first.width(), first.height());
    let rest = files.into_iter().skip(1).map(|(_, path)| read_pgm(path));
    Ok(FrameStream::from_iter(
        fps.unwrap_or_default(),
        dims,
        StreamSource::Directory {
            dir: dir.to_path_buf(),
            pattern: pattern.to_string(),
        },
        Box::new(std::iter::once(Ok(first)).chain(rest)),
    ))
}
