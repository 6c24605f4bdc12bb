use std::io::{self, BufRead, Write};

use super::protocol::{ExecRequest, ExecResponse, Handshake};
use super::{ExecStatus, Executor};

/// Runs the worker side of the protocol over `input`/`output` until end of
/// input. Limits in the request are not enforced here; use this only with
/// executors that always terminate.
pub fn serve<R: BufRead, W: Write>(executor: &dyn Executor, input: R, mut output: W) -> io::Result<()> {
    writeln!(output, "{}", serde_json::to_string(&Handshake::current())?)?;
    output.flush()?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<ExecRequest>(&line) {
            Err(e) => ExecResponse::failed(None, ExecStatus::RuntimeError, format!("malformed request: {e}")),
            Ok(req) => match executor.execute(&req.source) {
                Ok(spec) => ExecResponse::ok(req.id, spec.to_canonical()),
                Err(f) => ExecResponse::failed(Some(req.id), f.status, f.detail),
            },
        };
        writeln!(output, "{}", serde_json::to_string(&response)?)?;
        output.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::ScriptInterpreter;
    use crate::walker::{render_program, square_seed_spec};

    #[test]
    fn serves_in_order_and_survives_garbage() {
        let ok = ExecRequest {
            id: 5,
            source: render_program(&square_seed_spec()),
            entrypoint: "make_walker".into(),
            timeout_ms: 1000,
            memory_mb: 64,
        };
        let input = format!("{}\nnot json\n{}\n", serde_json::to_string(&ok).unwrap(), r#"{"id":6,"source":"x = (","timeout_ms":1,"memory_mb":1}"#);
        let mut out = Vec::new();
        serve(&ScriptInterpreter::new(), input.as_bytes(), &mut out).unwrap();
        let lines: Vec<&str> = std::str::from_utf8(&out).unwrap().lines().collect();
        assert_eq!(lines.len(), 4);
        let r: Vec<ExecResponse> = lines[1..].iter().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(r[0].walker.as_deref(), Some(square_seed_spec().to_canonical().as_str()));
        assert_eq!((r[1].id, r[1].status), (None, ExecStatus::RuntimeError));
        assert_eq!((r[2].id, r[2].status), (Some(6), ExecStatus::SyntaxError));
        assert!(r.iter().all(ExecResponse::well_formed));
    }
}
