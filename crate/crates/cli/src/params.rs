//! Rewrites `--key value` into the `key=value` form clap collects as
//! example parameters, for keys that are not flags of the subcommand.

use bpk_core::examples;
use clap::CommandFactory;

pub fn desugar(argv: Vec<String>) -> Vec<String> {
    let cmd = crate::Cli::command();
    let Some(sub) = argv.get(1).and_then(|name| cmd.find_subcommand(name)) else {
        return argv;
    };
    let takes_value = |long: &str| {
        sub.get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(long))
            .map(|a| a.get_action().takes_values())
    };

    // The example is the first positional after the subcommand.
    let mut i = 2;
    let mut example = None;
    while i < argv.len() {
        let t = &argv[i];
        match t.strip_prefix("--") {
            Some(long) if !long.contains('=') && takes_value(long) == Some(true) => i += 2,
            Some(_) => i += 1,
            None => {
                example = Some(i);
                break;
            }
        }
    }
    let Some(at) = example else { return argv };
    let Ok(info) = examples::info(&argv[at]) else { return argv };

    let mut out: Vec<String> = argv[..=at].to_vec();
    let mut rest = argv[at + 1..].iter();
    while let Some(t) = rest.next() {
        let Some(long) = t.strip_prefix("--") else {
            out.push(t.clone());
            continue;
        };
        let (key, inline) = match long.split_once('=') {
            Some((k, v)) => (k, Some(v.to_string())),
            None => (long, None),
        };
        let is_param = takes_value(key).is_none() && info.params.iter().any(|(k, _)| *k == key);
        if !is_param {
            out.push(t.clone());
            continue;
        }
        match inline.or_else(|| rest.next().cloned()) {
            Some(v) => out.push(format!("{key}={v}")),
            // Leave it for clap to report.
            None => out.push(t.clone()),
        }
    }
    out
}
