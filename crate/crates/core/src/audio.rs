//! Mono PCM16 clips and WAV interchange.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const SUPPORTED_RATES: [u32; 4] = [16_000, 22_050, 24_000, 44_100];

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("unsupported sample rate {0} Hz")]
    UnsupportedRate(u32),
    #[error("expected mono PCM16, found {channels} channel(s) at {bits} bits")]
    UnsupportedFormat { channels: u16, bits: u16 },
    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioClip {
    pub sample_rate_hz: u32,
    pub samples: Vec<i16>,
}

impl AudioClip {
    pub fn new(sample_rate_hz: u32, samples: Vec<i16>) -> Result<Self, AudioError> {
        if !SUPPORTED_RATES.contains(&sample_rate_hz) {
            return Err(AudioError::UnsupportedRate(sample_rate_hz));
        }
        Ok(Self {
            sample_rate_hz,
            samples,
        })
    }

    pub fn duration_ms(&self) -> u64 {
        self.samples.len() as u64 * 1000 / u64::from(self.sample_rate_hz)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Little-endian sample bytes, as hashed by the mock synthesizer.
    pub fn sample_bytes(&self, max_samples: usize) -> Vec<u8> {
        self.samples
            .iter()
            .take(max_samples)
            .flat_map(|s| s.to_le_bytes())
            .collect()
    }

    fn spec(&self) -> hound::WavSpec {
        hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate_hz,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        }
    }

    pub fn to_wav_bytes(&self) -> Vec<u8> {
        let mut buf = Cursor::new(Vec::new());
        {
            let mut writer = hound::WavWriter::new(&mut buf, self.spec()).expect("in-memory wav header");
            for &s in &self.samples {
                writer.write_sample(s).expect("in-memory wav write");
            }
            writer.finalize().expect("in-memory wav finalize");
        }
        buf.into_inner()
    }

    pub fn from_wav_bytes(bytes: &[u8]) -> Result<Self, AudioError> {
        Self::from_reader(hound::WavReader::new(Cursor::new(bytes))?)
    }

    pub fn read_wav(path: &Path) -> Result<Self, AudioError> {
        let bytes = std::fs::read(path).map_err(|source| AudioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_wav_bytes(&bytes)
    }

    pub fn write_wav(&self, path: &Path) -> Result<(), AudioError> {
        std::fs::write(path, self.to_wav_bytes()).map_err(|source| AudioError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    fn from_reader<R: std::io::Read>(reader: hound::WavReader<R>) -> Result<Self, AudioError> {
        let spec = reader.spec();
        if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
            return Err(AudioError::UnsupportedFormat {
                channels: spec.channels,
                bits: spec.bits_per_sample,
            });
        }
        let samples = reader.into_samples::<i16>().collect::<Result<Vec<_>, _>>()?;
        Self::new(spec.sample_rate, samples)
    }
}

/// A sine tone at `amplitude`, rounded half away from zero per sample.
pub fn sine_tone(sample_rate_hz: u32, frequency_hz: f64, n_samples: usize, amplitude: f64) -> Vec<i16> {
    let step = 2.0 * std::f64::consts::PI * frequency_hz / f64::from(sample_rate_hz);
    (0..n_samples)
        .map(|n| (amplitude * (step * n as f64).sin()).round() as i16)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsupported_rates() {
        assert!(matches!(
            AudioClip::new(8_000, vec![0]),
            Err(AudioError::UnsupportedRate(8_000))
        ));
        for rate in SUPPORTED_RATES {
            assert!(AudioClip::new(rate, vec![]).is_ok());
        }
    }

    #[test]
    fn wav_round_trip() {
        let clip = AudioClip::new(22_050, sine_tone(22_050, 220.0, 500, 9000.0)).unwrap();
        let bytes = clip.to_wav_bytes();
        assert_eq!(&bytes[..4], b"RIFF");
        assert_eq!(bytes.len(), 44 + 1000);
        assert_eq!(AudioClip::from_wav_bytes(&bytes).unwrap(), clip);
    }

    #[test]
    fn rejects_stereo() {
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut buf = Cursor::new(Vec::new());
        let mut w = hound::WavWriter::new(&mut buf, spec).unwrap();
        w.write_sample(1i16).unwrap();
        w.write_sample(1i16).unwrap();
        w.finalize().unwrap();
        assert!(matches!(
            AudioClip::from_wav_bytes(buf.get_ref()),
            Err(AudioError::UnsupportedFormat { channels: 2, .. })
        ));
    }

    #[test]
    fn sample_bytes_are_little_endian() {
        let clip = AudioClip::new(16_000, vec![1, -2, 0x0102]).unwrap();
        assert_eq!(clip.sample_bytes(2), vec![1, 0, 0xfe, 0xff]);
        assert_eq!(clip.sample_bytes(64).len(), 6);
    }
}
