//! Synthetic Wireshark CSV exports for the three default activities.
//!
//! Each activity has its own packet-length and timestamp distributions
//! (Gaussian), protocol mix and remote hosts. Info strings carry embedded
//! double quotes, as real exports often do, so quote stripping has work to do.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::dataset::{DEFAULT_LABELS, WIRESHARK_COLUMNS};
use crate::error::{Error, Result};

const LOCAL_HOST: &str = "192.168.1.23";

struct Profile {
    length: (f64, f64),
    time: (f64, f64),
    protocols: &'static [(&'static str, f64)],
    remotes: &'static [&'static str],
}

const PROFILES: [Profile; 3] = [
    Profile {
        length: (560.0, 260.0),
        time: (20.0, 9.0),
        protocols: &[("TCP", 0.45), ("TLSv1.2", 0.30), ("HTTP", 0.10), ("DNS", 0.10), ("QUIC", 0.05)],
        remotes: &[
            "142.250.74.36",
            "142.250.74.99",
            "151.101.1.140",
            "104.16.132.229",
            "13.107.21.200",
            "192.168.1.1",
        ],
    },
    Profile {
        length: (1000.0, 260.0),
        time: (40.0, 9.0),
        protocols: &[("UDP", 0.50), ("TLSv1.3", 0.25), ("TCP", 0.20), ("DNS", 0.05)],
        remotes: &["35.186.224.25", "35.186.224.47", "104.199.65.124", "192.168.1.1"],
    },
    Profile {
        length: (150.0, 90.0),
        time: (60.0, 9.0),
        protocols: &[("ICMP", 0.45), ("DNS", 0.25), ("ARP", 0.15), ("TCP", 0.15)],
        remotes: &["8.8.8.8", "1.1.1.1", "192.168.1.1", "9.9.9.9"],
    },
];

const HOSTS: [&str; 6] = [
    "www.example.com",
    "cdn.example.net",
    "audio-fa.scdn.co",
    "time.apple.com",
    "news.example.org",
    "api.example.io",
];

fn info(protocol: &str, length: u32, rng: &mut ChaCha8Rng) -> String {
    let host = HOSTS[rng.random_range(0..HOSTS.len())];
    let port: u16 = rng.random_range(49152..65535);
    match protocol {
        "DNS" => format!("Standard query 0x{:04x} A \"{host}\"", rng.random::<u16>()),
        "HTTP" => format!("GET \"/{}\" HTTP/1.1", host.split('.').next().unwrap_or("index")),
        "TLSv1.2" | "TLSv1.3" => "Application Data".to_string(),
        "QUIC" => format!("Protected Payload (KP0), DCID=\"{:08x}\"", rng.random::<u32>()),
        "UDP" => format!("{port} > 4070 Len={}", length.saturating_sub(42)),
        "ICMP" => format!(
            "Echo (ping) request  id=0x0001, seq={}/256, ttl=64",
            rng.random_range(1..2000)
        ),
        "ARP" => format!("Who has 192.168.1.1? Tell {LOCAL_HOST}"),
        _ => format!(
            "{port} > 443 [ACK] Seq={} Ack={} Win=501 Len={}",
            rng.random_range(1..100_000),
            rng.random_range(1..100_000),
            length.saturating_sub(54)
        ),
    }
}

fn quote(field: &str) -> String {
    format!("\"{}\"", field.replace('"', "\"\""))
}

/// CSV text of one capture of `activity` (an index into the default labels),
/// in Wireshark's export layout with every field quoted.
pub fn capture_csv(activity: usize, records: usize, seed: u64) -> Result<String> {
    let profile = PROFILES.get(activity).ok_or_else(|| {
        Error::invalid(format!("activity index {activity} out of range (0..{})", PROFILES.len()))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((activity as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    let normal = |(m, s): (f64, f64)| Normal::new(m, s).map_err(|e| Error::invalid(e.to_string()));
    let length = normal(profile.length)?;
    let time = normal(profile.time)?;
    let protocol = WeightedIndex::new(profile.protocols.iter().map(|p| p.1)).map_err(|e| Error::invalid(e.to_string()))?;

    let mut times: Vec<f64> = (0..records).map(|_| time.sample(&mut rng).max(0.0)).collect();
    times.sort_by(f64::total_cmp);

    let mut out = String::new();
    let header: Vec<String> = WIRESHARK_COLUMNS.iter().map(|c| quote(c)).collect();
    let _ = writeln!(out, "{}", header.join(","));
    for (i, t) in times.into_iter().enumerate() {
        let proto = profile.protocols[protocol.sample(&mut rng)].0;
        let len = length.sample(&mut rng).round().clamp(42.0, 1514.0) as u32;
        let remote = profile.remotes[rng.random_range(0..profile.remotes.len())];
        let (src, dst) = if rng.random_bool(0.5) {
            (LOCAL_HOST, remote)
        } else {
            (remote, LOCAL_HOST)
        };
        let fields = [
            (i + 1).to_string(),
            format!("{t:.6}"),
            src.to_string(),
            dst.to_string(),
            proto.to_string(),
            len.to_string(),
            info(proto, len, &mut rng),
        ];
        let quoted: Vec<String> = fields.iter().map(|f| quote(f)).collect();
        let _ = writeln!(out, "{}", quoted.join(","));
    }
    Ok(out)
}

/// One capture per default activity, `records` rows each, paired with its
/// label.
pub fn corpus_csvs(records: usize, seed: u64) -> Result<Vec<(String, String)>> {
    DEFAULT_LABELS
        .iter()
        .enumerate()
        .map(|(a, label)| Ok((label.to_string(), capture_csv(a, records, seed)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::csv::{read_csv, CsvOptions};
    use crate::dataset::AttributeKind;

    #[test]
    fn capture_parses_with_wireshark_columns() {
        let text = capture_csv(0, 200, 9).unwrap();
        let ds = read_csv(text.as_bytes(), &CsvOptions::default(), "c").unwrap();
        assert_eq!(ds.len(), 200);
        let names: Vec<&str> = ds.schema().attributes().iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, WIRESHARK_COLUMNS);
        assert_eq!(ds.schema().attribute(5).kind, AttributeKind::Numeric);
        assert!(ds.schema().attribute(4).kind.is_nominal());
        assert!(text.contains("\"\""));
    }

    #[test]
    fn generation_is_seeded() {
        assert_eq!(capture_csv(1, 50, 3).unwrap(), capture_csv(1, 50, 3).unwrap());
        assert_ne!(capture_csv(1, 50, 3).unwrap(), capture_csv(1, 50, 4).unwrap());
        assert_ne!(capture_csv(0, 50, 3).unwrap(), capture_csv(1, 50, 3).unwrap());
        assert!(capture_csv(3, 5, 0).is_err());
        assert_eq!(corpus_csvs(5, 0).unwrap().len(), 3);
    }
}
