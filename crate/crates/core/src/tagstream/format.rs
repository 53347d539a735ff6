//! Time-tag containers and their binary and CSV encodings.
//!
//! Binary layout (little endian): a 16-byte header `"TTAG"`, `u16` version,
//! `u16` channel count, `u64` tick length in femtoseconds; then 12-byte
//! records of `u64` tick, `u8` channel and three zero bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TTAG";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 12;
/// 81 ps time-to-digital converter resolution.
pub const DEFAULT_TICK_FS: u64 = 81_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeTag {
    pub tick: u64,
    pub channel: u8,
}

impl TimeTag {
    pub fn new(channel: u8, tick: u64) -> Self {
        Self { tick, channel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamFormat {
    Binary,
    Csv,
}

/// Detection events ordered by time, ties by channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeTagStream {
    tick_fs: u64,
    n_channels: u16,
    tags: Vec<TimeTag>,
}

impl TimeTagStream {
    /// Validates ordering and channel range.
    pub fn new(tick_fs: u64, n_channels: u16, tags: Vec<TimeTag>) -> Result<Self> {
        if tick_fs == 0 {
            return Err(Error::Format("tick length must be positive".into()));
        }
        for (index, pair) in tags.windows(2).enumerate() {
            if pair[1].tick < pair[0].tick {
                return Err(Error::NonMonotonic {
                    index: index + 1,
                    time: pair[1].tick,
                    previous: pair[0].tick,
                });
            }
        }
        if let Some(bad) = tags.iter().find(|t| t.channel as u16 >= n_channels) {
            return Err(Error::Format(format!(
                "channel {} outside the {n_channels} declared channels",
                bad.channel
            )));
        }
        Ok(Self {
            tick_fs,
            n_channels,
            tags,
        })
    }

    /// Sorts arbitrary tags into stream order.
    pub fn from_unsorted(tick_fs: u64, n_channels: u16, mut tags: Vec<TimeTag>) -> Result<Self> {
        tags.sort_unstable();
        Self::new(tick_fs, n_channels, tags)
    }

    pub fn empty(tick_fs: u64, n_channels: u16) -> Self {
        Self {
            tick_fs,
            n_channels,
            tags: Vec::new(),
        }
    }

    pub fn tick_fs(&self) -> u64 {
        self.tick_fs
    }

    /// Tick length in ns.
    pub fn tick_ns(&self) -> f64 {
        self.tick_fs as f64 * 1e-6
    }

    pub fn n_channels(&self) -> u16 {
        self.n_channels
    }

    pub fn tags(&self) -> &[TimeTag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn time_ns(&self, tag: &TimeTag) -> f64 {
        tag.tick as f64 * self.tick_ns()
    }

    /// Whole ticks covering `ns`, rounded up.
    pub fn ticks_for(&self, ns: f64) -> u64 {
        (ns * 1e6 / self.tick_fs as f64).ceil() as u64
    }

    pub fn counts_per_channel(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_channels as usize];
        for t in &self.tags {
            counts[t.channel as usize] += 1;
        }
        counts
    }

    /// Run span from the first to the last tag in ns.
    pub fn span_ns(&self) -> f64 {
        match (self.tags.first(), self.tags.last()) {
            (Some(a), Some(b)) => (b.tick - a.tick) as f64 * self.tick_ns(),
            _ => 0.0,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * self.tags.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.n_channels.to_le_bytes());
        out.extend_from_slice(&self.tick_fs.to_le_bytes());
        for t in &self.tags {
            out.extend_from_slice(&t.tick.to_le_bytes());
            out.extend_from_slice(&[t.channel, 0, 0, 0]);
        }
        out
    }

    pub fn parse_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "header needs {HEADER_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic, expected TTAG".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n_channels = u16::from_le_bytes([bytes[6], bytes[7]]);
        let tick_fs = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let body = &bytes[HEADER_LEN..];
        if !body.len().is_multiple_of(RECORD_LEN) {
            return Err(Error::Format(format!(
                "truncated record {} ({} trailing bytes)",
                body.len() / RECORD_LEN,
                body.len() % RECORD_LEN
            )));
        }
        let tags = body
            .chunks_exact(RECORD_LEN)
            .map(|r| {
                TimeTag::new(
                    r[8],
                    u64::from_le_bytes(r[..8].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Self::new(tick_fs, n_channels, tags)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# ttag v{FORMAT_VERSION} tick_fs={} channels={}\nchannel,tick\n",
            self.tick_fs, self.n_channels
        );
        for t in &self.tags {
            let _ = writeln!(out, "{},{}", t.channel, t.tick);
        }
        out
    }

    /// Parses `channel,tick` rows. The `# ttag` comment line, when present,
    /// supplies tick length and channel count; otherwise 81 ps and the
    /// highest channel seen are assumed.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut tick_fs = DEFAULT_TICK_FS;
        let mut n_channels: Option<u16> = None;
        let mut tags = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for field in comment.split_whitespace() {
                    if let Some(v) = field.strip_prefix("tick_fs=") {
                        tick_fs = v.parse().map_err(|_| {
                            Error::Format(format!("line {}: bad tick_fs", lineno + 1))
                        })?;
                    } else if let Some(v) = field.strip_prefix("channels=") {
                        n_channels = Some(v.parse().map_err(|_| {
                            Error::Format(format!("line {}: bad channels", lineno + 1))
                        })?);
                    }
                }
                continue;
            }
            if line.eq_ignore_ascii_case("channel,tick") {
                continue;
            }
            let (ch, tick) = line.split_once(',').ok_or_else(|| {
                Error::Format(format!("line {}: expected `channel,tick`", lineno + 1))
            })?;
            let channel: u8 = ch
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad channel `{ch}`", lineno + 1)))?;
            let tick: u64 = tick
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad tick `{tick}`", lineno + 1)))?;
            tags.push(TimeTag::new(channel, tick));
        }
        let n_channels = n_channels
            .unwrap_or_else(|| tags.iter().map(|t| t.channel as u16 + 1).max().unwrap_or(1));
        Self::new(tick_fs, n_channels, tags)
    }

    /// Reads either encoding, recognized by the magic bytes.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(MAGIC) {
            Self::parse_bytes(&bytes)
        } else {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::Format("neither TTAG binary nor UTF-8 CSV".into()))?;
            Self::parse_csv(&text)
        }
    }

    pub fn write(&self, path: &Path, format: StreamFormat) -> Result<()> {
        match format {
            StreamFormat::Binary => std::fs::write(path, self.to_bytes())?,
            StreamFormat::Csv => std::fs::write(path, self.to_csv())?,
        }
        Ok(())
    }
}
