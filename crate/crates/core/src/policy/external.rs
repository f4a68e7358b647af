//! Bridge to a policy served by a child process.
//!
//! Protocol: one request line `x1 x2 x3 x4\n` on the child's stdin, one reply
//! line `a\n` on its stdout, strictly alternating. Times are written in the
//! configured units.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Policy, PolicyError};
use crate::env::{ActionValue, Observation, Units};

/// How to launch an external policy process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSpec {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub units: Units,
}

fn default_timeout_ms() -> u64 {
    1000
}

pub struct ExternalPolicy {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<std::io::Result<String>>,
    timeout: Duration,
    units: Units,
}

impl ExternalPolicy {
    pub fn spawn(spec: &ExternalSpec) -> Result<Self, PolicyError> {
        let (program, args) = spec
            .command
            .split_first()
            .ok_or_else(|| PolicyError::Unavailable("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PolicyError::Unavailable(format!("spawning {program}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            replies: rx,
            timeout: Duration::from_millis(spec.timeout_ms),
            units: spec.units,
        })
    }

    /// Sends one observation and waits for the reply.
    pub fn request(&mut self, obs: &Observation) -> Result<ActionValue, PolicyError> {
        let v = obs.to_vars(self.units);
        writeln!(self.stdin, "{:?} {:?} {:?} {:?}", v[0], v[1], v[2], v[3])
            .and_then(|_| self.stdin.flush())
            .map_err(|e| PolicyError::Unavailable(format!("writing request: {e}")))?;
        let line = match self.replies.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(PolicyError::Unavailable(format!("reading reply: {e}"))),
            Err(RecvTimeoutError::Timeout) => return Err(PolicyError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(PolicyError::Unavailable(
                    "endpoint closed its output".into(),
                ))
            }
        };
        parse_reply(&line)
    }
}

pub(crate) fn parse_reply(line: &str) -> Result<ActionValue, PolicyError> {
    let a: f64 = line
        .trim()
        .parse()
        .map_err(|_| PolicyError::Protocol(format!("malformed reply {line:?}")))?;
    ActionValue::new(a).map_err(|_| PolicyError::Range(a))
}

impl Policy for ExternalPolicy {
    fn act(&mut self, obs: &Observation) -> Result<ActionValue, PolicyError> {
        self.request(obs)
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str, timeout_ms: u64) -> ExternalSpec {
        ExternalSpec {
            command: vec!["sh".into(), "-c".into(), script.into()],
            timeout_ms,
            units: Units::Seconds,
        }
    }

    fn obs() -> Observation {
        Observation::new(1.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn echoes_reply() {
        let mut p = ExternalPolicy::spawn(&sh("while read l; do echo 1.1; done", 2000)).unwrap();
        assert_eq!(p.act(&obs()).unwrap().get(), 1.1);
        assert_eq!(p.act(&obs()).unwrap().get(), 1.1);
    }

    #[test]
    fn request_line_format() {
        // Echo the request back as an action only if it matches exactly.
        let script = r#"while read l; do if [ "$l" = "1.0 1.0 1.0 0.0" ]; then echo 1.2; else echo bad; fi; done"#;
        let mut p = ExternalPolicy::spawn(&sh(script, 2000)).unwrap();
        assert_eq!(p.act(&obs()).unwrap().get(), 1.2);
    }

    #[test]
    fn out_of_range_reply() {
        let mut p = ExternalPolicy::spawn(&sh("while read l; do echo 2.0; done", 2000)).unwrap();
        assert!(matches!(p.act(&obs()), Err(PolicyError::Range(a)) if a == 2.0));
    }

    #[test]
    fn malformed_reply() {
        let mut p = ExternalPolicy::spawn(&sh("while read l; do echo fast; done", 2000)).unwrap();
        assert!(matches!(p.act(&obs()), Err(PolicyError::Protocol(_))));
    }

    #[test]
    fn silent_endpoint_times_out() {
        let mut p = ExternalPolicy::spawn(&sh("while read l; do sleep 5; done", 100)).unwrap();
        assert!(matches!(p.act(&obs()), Err(PolicyError::Timeout(_))));
    }

    #[test]
    fn missing_program_is_unavailable() {
        let spec = ExternalSpec {
            command: vec!["/nonexistent/policy-server".into()],
            timeout_ms: 100,
            units: Units::Seconds,
        };
        assert!(matches!(
            ExternalPolicy::spawn(&spec),
            Err(PolicyError::Unavailable(_))
        ));
    }
}
