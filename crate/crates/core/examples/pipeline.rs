//! Drive the end-to-end pipeline through the command-line entry point:
//! lexicon build, synthetic ensemble, MBR combination, scoring, cWER and
//! smoothing, all from one key=value config.

use std::fs;

use gramcomb::cli;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("gramcomb-pipeline-{}", std::process::id()));
    fs::create_dir_all(&dir)?;

    fs::write(dir.join("words.txt"), "the\ncat\nB.B.C.'s\nrock'n'roll\n")?;
    let refs: String = (0..200)
        .map(|u| format!("utt{u:03}\tthe quick brown fox number {} jumps over {} lazy dogs\n", u % 17, u % 5))
        .collect();
    fs::write(dir.join("refs.txt"), refs)?;
    fs::write(
        dir.join("pipeline.conf"),
        "# synthetic three-system run\n\
         stages = lexicon-build, synth-ensemble, mbr-combine, score, cwer\n\
         words = words.txt\n\
         ref = refs.txt\n\
         systems = 3\n\
         target_wer = 25\n\
         seed = 7\n",
    )?;

    let conf = dir.join("pipeline.conf");
    let out = dir.join("out");
    let argv = [
        "gramcomb",
        "pipeline",
        "--config",
        conf.to_str().ok_or("non-utf8 path")?,
        "--out-dir",
        out.to_str().ok_or("non-utf8 path")?,
    ];
    let code = cli::run(argv, &mut std::io::stdout(), &mut std::io::stderr());
    if code != 0 {
        return Err(format!("pipeline exited with {code}").into());
    }

    let mut files: Vec<String> = fs::read_dir(&out)?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    files.sort();
    println!("wrote {} under {}", files.join(", "), out.display());
    fs::remove_dir_all(&dir)?;
    Ok(())
}
