//! Client side of the external sampler interface.

use super::anneal::solve_sa_tagged;
use super::{Sample, SolveResult, SolverConfig, SolverError, SolverKind};
use crate::qubo::{energy, parse_triplets, write_triplets, BinarySolution, QuboProblem};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerEndpoint {
    /// Round-trips the problem through the wire format and anneals locally.
    #[default]
    Loopback,
    /// Plain TCP: the request is the triplet text, terminated by closing the
    /// write half; the reply is a line of bits and a line `energy=<real>`.
    Tcp { addr: String, timeout_ms: u64 },
}

/// Serializes `problem` to triplets and hands it to `endpoint`.
pub fn external_sampler_submit(
    problem: &QuboProblem,
    endpoint: &SamplerEndpoint,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    let wire = write_triplets(problem);
    match endpoint {
        SamplerEndpoint::Loopback => {
            let received = parse_triplets(&wire)?;
            let mut result = solve_sa_tagged(&received, config, SolverKind::ExternalStub)?;
            // rescore against the caller's problem, whatever its convention
            for s in &mut result.samples {
                s.energy = energy(problem, &s.bits)?;
            }
            result.best_energy = energy(problem, &result.best)?;
            Ok(result)
        }
        SamplerEndpoint::Tcp { addr, timeout_ms } => {
            submit_tcp(problem, &wire, addr, Duration::from_millis(*timeout_ms))
        }
    }
}

fn submit_tcp(problem: &QuboProblem, wire: &str, addr: &str, timeout: Duration) -> Result<SolveResult, SolverError> {
    let started = Instant::now();
    let transport = |e: std::io::Error| SolverError::Transport(format!("{addr}: {e}"));
    let target = addr
        .to_socket_addrs()
        .map_err(transport)?
        .next()
        .ok_or_else(|| SolverError::Transport(format!("{addr}: no address")))?;
    let mut stream = TcpStream::connect_timeout(&target, timeout).map_err(transport)?;
    stream.set_read_timeout(Some(timeout)).map_err(transport)?;
    stream.set_write_timeout(Some(timeout)).map_err(transport)?;
    stream.write_all(wire.as_bytes()).map_err(transport)?;
    stream.shutdown(Shutdown::Write).map_err(transport)?;
    let mut reply = String::new();
    stream.read_to_string(&mut reply).map_err(transport)?;
    let (bits, reported) = parse_reply(&reply, problem.size())?;
    let best = BinarySolution::from_bits(bits);
    let best_energy = energy(problem, &best)?;
    let tol = 1e-9 * (1.0 + best_energy.abs());
    if !(best_energy.is_infinite() && reported == best_energy) && (reported - best_energy).abs() > tol {
        log::warn!("sampler reported energy {reported}, recomputed {best_energy}");
    }
    Ok(SolveResult {
        solver: SolverKind::ExternalStub,
        best: best.clone(),
        best_energy,
        samples: vec![Sample {
            energy: best_energy,
            bits: best,
        }],
        wall_time: started.elapsed(),
        evaluations: 1,
    })
}

fn parse_reply(reply: &str, n: usize) -> Result<(Vec<u8>, f64), SolverError> {
    let mut lines = reply.lines().map(str::trim).filter(|l| !l.is_empty());
    let bit_line = lines
        .next()
        .ok_or_else(|| SolverError::Protocol("empty response".into()))?;
    let bits = bit_line
        .split_whitespace()
        .map(|t| match t {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            other => Err(SolverError::Protocol(format!("bad bit {other:?}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if bits.len() != n {
        return Err(SolverError::Protocol(format!("expected {n} bits, got {}", bits.len())));
    }
    let energy = lines
        .next()
        .and_then(|l| l.strip_prefix("energy="))
        .ok_or_else(|| SolverError::Protocol("missing `energy=` line".into()))?
        .trim()
        .parse::<f64>()
        .map_err(|e| SolverError::Protocol(format!("bad energy: {e}")))?;
    Ok((bits, energy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::CoefficientMatrix;
    use crate::solvers::solve_sa;
    use std::net::TcpListener;

    fn problem() -> QuboProblem {
        let q =
            CoefficientMatrix::from_rows(&[vec![-1.0, 0.25, 0.5], vec![0.25, -0.75, -0.125], vec![0.5, -0.125, 0.3]])
                .unwrap();
        QuboProblem::new(q, Some(2)).unwrap().with_auto_penalty()
    }

    #[test]
    fn loopback_matches_sa() {
        let p = problem();
        let c = SolverConfig::new(SolverKind::Sa, 21).with_samples(12);
        let a = external_sampler_submit(&p, &SamplerEndpoint::Loopback, &c).unwrap();
        let b = solve_sa(&p, &c).unwrap();
        assert_eq!(a.solver, SolverKind::ExternalStub);
        assert_eq!(a.samples, b.samples);
        assert_eq!((a.best, a.best_energy), (b.best, b.best_energy));
    }

    fn serve_once(reply: &'static str) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        std::thread::spawn(move || {
            let (mut s, _) = listener.accept().unwrap();
            let mut req = String::new();
            s.read_to_string(&mut req).unwrap();
            assert!(req.starts_with("qubo n=3 k=2"));
            s.write_all(reply.as_bytes()).unwrap();
        });
        addr
    }

    #[test]
    fn tcp_round_trip() {
        let addr = serve_once("1 1 0\nenergy=-1.25\n");
        let endpoint = SamplerEndpoint::Tcp { addr, timeout_ms: 5000 };
        let r = external_sampler_submit(&problem(), &endpoint, &SolverConfig::default()).unwrap();
        assert_eq!(r.best.bits(), &[1, 1, 0]);
        assert_eq!(r.best_energy, -1.25);
    }

    #[test]
    fn wrong_length_is_a_protocol_error() {
        let addr = serve_once("1 1\nenergy=0\n");
        let endpoint = SamplerEndpoint::Tcp { addr, timeout_ms: 5000 };
        let err = external_sampler_submit(&problem(), &endpoint, &SolverConfig::default()).unwrap_err();
        assert!(
            matches!(&err, SolverError::Protocol(m) if m.contains("expected 3 bits, got 2")),
            "{err}"
        );
    }

    #[test]
    fn unreachable_is_a_transport_error() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        drop(listener);
        let endpoint = SamplerEndpoint::Tcp { addr, timeout_ms: 500 };
        let err = external_sampler_submit(&problem(), &endpoint, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, SolverError::Transport(_)));
    }
}
