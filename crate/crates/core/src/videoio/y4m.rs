use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{Frame, FrameStream, Rational, StreamSource, VideoError};

const MAGIC: &str = "YUV4MPEG2";
const MAX_HEADER: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chroma {
    C420,
    Mono,
}

impl Chroma {
    fn parse(tag: &str) -> Option<Self> {
        if tag.starts_with("420") {
            Some(Chroma::C420)
        } else if tag == "mono" {
            Some(Chroma::Mono)
        } else {
            None
        }
    }

    fn chroma_bytes(self, width: usize, height: usize) -> usize {
        match self {
            Chroma::C420 => 2 * width.div_ceil(2) * height.div_ceil(2),
            Chroma::Mono => 0,
        }
    }
}

struct Header {
    width: usize,
    height: usize,
    fps: Rational,
    chroma: Chroma,
}

/// Reads bytes up to and excluding the next `\n`. Returns `None` on a clean
/// EOF before any byte was read.
fn read_line(reader: &mut impl BufRead, limit: usize) -> std::io::Result<Option<Vec<u8>>> {
    let mut line = Vec::new();
    let n = reader.by_ref().take(limit as u64).read_until(b'\n', &mut line)?;
    if n == 0 {
        return Ok(None);
    }
    if line.last() == Some(&b'\n') {
        line.pop();
    } else {
        return Err(std::io::ErrorKind::UnexpectedEof.into());
    }
    Ok(Some(line))
}

fn parse_header(path: &Path, line: &[u8]) -> Result<Header, VideoError> {
    let header_err = |reason: String| VideoError::Header {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::str::from_utf8(line).map_err(|_| header_err("not ASCII".into()))?;
    let mut tokens = text.split(' ').filter(|t| !t.is_empty());
    if tokens.next() != Some(MAGIC) {
        return Err(VideoError::Format {
            path: path.to_path_buf(),
            expected: "YUV4MPEG2",
        });
    }
    let (mut width, mut height, mut fps) = (None, None, None);
    let mut chroma = Chroma::C420;
    for token in tokens {
        let (tag, value) = token.split_at(1);
        match tag {
            "W" => width = value.parse::<usize>().ok().filter(|&w| w > 0),
            "H" => height = value.parse::<usize>().ok().filter(|&h| h > 0),
            "F" => {
                fps = value.split_once(':').and_then(|(n, d)| {
                    let n = n.parse::<u32>().ok()?;
                    let d = d.parse::<u32>().ok()?;
                    (n > 0 && d > 0).then_some(Rational::new(n, d))
                })
            }
            "C" => {
                chroma = Chroma::parse(value).ok_or_else(|| VideoError::Unsupported {
                    path: path.to_path_buf(),
                    what: format!("colorspace C{value}"),
                })?
            }
            _ => {}
        }
    }
    Ok(Header {
        width: width.ok_or_else(|| header_err("missing or invalid W".into()))?,
        height: height.ok_or_else(|| header_err("missing or invalid H".into()))?,
        fps: fps.ok_or_else(|| header_err("missing or invalid F".into()))?,
        chroma,
    })
}

struct Y4mFrames {
    path: PathBuf,
    reader: BufReader<File>,
    header: Header,
    index: usize,
    done: bool,
}

impl Y4mFrames {
    fn read_frame(&mut self) -> Result<Option<Frame>, VideoError> {
        let truncated = |path: &Path, index| VideoError::Truncated {
            path: path.to_path_buf(),
            index,
        };
        let line = match read_line(&mut self.reader, MAX_HEADER) {
            Ok(None) => return Ok(None),
            Ok(Some(line)) => line,
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                return Err(truncated(&self.path, self.index))
            }
            Err(source) => {
                return Err(VideoError::Read {
                    path: self.path.clone(),
                    source,
                })
            }
        };
        if !line.starts_with(b"FRAME") {
            return Err(VideoError::Format {
                path: self.path.clone(),
                expected: "YUV4MPEG2 frame",
            });
        }
        let (w, h) = (self.header.width, self.header.height);
        let mut luma = vec![0u8; w * h];
        let mut chroma = vec![0u8; self.header.chroma.chroma_bytes(w, h)];
        for buf in [&mut luma, &mut chroma] {
            self.reader.read_exact(buf).map_err(|e| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => truncated(&self.path, self.index),
                _ => VideoError::Read {
                    path: self.path.clone(),
                    source: e,
                },
            })?;
        }
        let frame = Frame::new(w, h, luma, self.index)?;
        self.index += 1;
        Ok(Some(frame))
    }
}

impl Iterator for Y4mFrames {
    type Item = Result<Frame, VideoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.read_frame().transpose();
        if !matches!(item, Some(Ok(_))) {
            self.done = true;
        }
        item
    }
}

/// Opens a YUV4MPEG2 file. Only the luma plane of each frame is kept.
pub fn open_y4m(path: impl AsRef<Path>) -> Result<FrameStream, VideoError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| VideoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = BufReader::new(file);
    let line = match read_line(&mut reader, MAX_HEADER) {
        Ok(Some(line)) => line,
        Ok(None) | Err(_) => {
            return Err(VideoError::Format {
                path: path.to_path_buf(),
                expected: "YUV4MPEG2",
            })
        }
    };
    let header = parse_header(path, &line)?;
    let fps = header.fps;
    let dims = (header.width, header.height);
    let frames = Y4mFrames {
        path: path.to_path_buf(),
        reader,
        header,
        index: 0,
        done: false,
    };
    Ok(FrameStream::from_iter(
        fps,
        dims,
        StreamSource::File(path.to_path_buf()),
        Box::new(frames),
    ))
}

/// Writes frames as a 4:2:0 YUV4MPEG2 file with neutral chroma.
pub fn write_y4m<'a>(
    path: impl AsRef<Path>,
    fps: Rational,
    frames: impl IntoIterator<Item = &'a Frame>,
) -> Result<usize, VideoError> {
    let path = path.as_ref();
    let write_err = |source| VideoError::Write {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(write_err)?;
    let mut out = BufWriter::new(file);
    let mut frames = frames.into_iter().peekable();
    let (w, h) = match frames.peek() {
        Some(f) => (f.width(), f.height()),
        None => return Err(VideoError::InvalidFrame("no frames to write".into())),
    };
    writeln!(out, "{MAGIC} W{w} H{h} F{fps} Ip A1:1 C420jpeg").map_err(write_err)?;
    let chroma = vec![128u8; Chroma::C420.chroma_bytes(w, h)];
    let mut count = 0;
    for (i, frame) in frames.enumerate() {
        if (frame.width(), frame.height()) != (w, h) {
            return Err(VideoError::DimensionMismatch {
                index: i,
                expected: (w, h),
                got: (frame.width(), frame.height()),
            });
        }
        out.write_all(b"FRAME\n").map_err(write_err)?;
        out.write_all(frame.pixels()).map_err(write_err)?;
        out.write_all(&chroma).map_err(write_err)?;
        count += 1;
    }
    out.flush().map_err(write_err)?;
    Ok(count)
}
