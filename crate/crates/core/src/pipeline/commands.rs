use std::path::Path;

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::report::Report;
use crate::error::{Error, Result};
use crate::feature_io::{read_feature_header, synth_corpus, CorpusManifest, ManifestEntry};
use crate::fsutil;
use crate::kmeans::{assign, lloyd_fit, load_codebook, save_codebook, subsample_frames, Codebook};
use crate::metrics::{joint_counts, length_stats, LengthStats, MetricReport, PhoneLabels};
use crate::storage::{
    bit_width, bits_to_gb, measure_corpus, pack, pack_pieces, size_bits, token_files, write_token_file, SizeModel,
    TokenFlags,
};
use crate::tokenize::{dedup, encode as subword_encode, time_mask, unigram_train, SubwordModel};
use crate::tokens::TokenSequence;

/// Mask seed for the `index`-th utterance, so every utterance gets its own
/// spans and the result does not depend on processing order.
pub fn utterance_mask_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn load_manifest(cfg: &PipelineConfig) -> Result<CorpusManifest> {
    CorpusManifest::read(&cfg.manifest_path())
}

fn raw_tokens(manifest: &CorpusManifest, entry: &ManifestEntry, codebook: &Codebook) -> Result<TokenSequence> {
    assign(codebook, &manifest.load(entry)?)
}

fn all_raw_tokens(manifest: &CorpusManifest, codebook: &Codebook) -> Result<Vec<TokenSequence>> {
    manifest
        .entries()
        .par_iter()
        .map(|e| raw_tokens(manifest, e, codebook))
        .collect()
}

/// Writes a synthetic feature corpus, its manifest and frame-level phone labels.
pub fn synth(cfg: &PipelineConfig) -> Result<Report> {
    cfg.synth.validate()?;
    let corpus = synth_corpus(&cfg.synth)?;
    let manifest_path = cfg.manifest_path();
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    fsutil::create_dir_all(root)?;
    let manifest = corpus.write_features(root)?;
    manifest.write(&manifest_path)?;

    let ids = manifest.entries().iter().map(|e| e.utterance_id.clone());
    let labels = PhoneLabels::from_entries(ids.zip(corpus.phone_labels.iter().cloned()).collect())?;
    let labels_path = cfg.phone_labels_path();
    if let Some(dir) = labels_path.parent() {
        fsutil::create_dir_all(dir)?;
    }
    labels.write(&labels_path)?;

    let s = &cfg.synth;
    let expected_dedup = s.persistence * (s.frames_per_utt - 1) as f64 / s.frames_per_utt as f64;
    let mut r = Report::default();
    r.line(format!(
        "synthesized {} utterances x {} frames, dim {}, {} clusters, {} phones",
        s.num_utts,
        s.frames_per_utt,
        s.dim,
        s.num_clusters,
        s.num_phones()
    ));
    r.line(format!("manifest: {}", manifest_path.display()));
    r.line(format!("phone labels: {}", labels_path.display()));
    r.line(format!("expected dedup reduction: {:.3}", expected_dedup));
    r.value("num_utts", s.num_utts);
    r.value("total_frames", manifest.total_frames());
    r.value("expected_dedup_reduction", expected_dedup);
    Ok(r)
}

/// Fits the codebook on the (optionally subsampled) corpus frames.
pub fn train_kmeans(cfg: &PipelineConfig) -> Result<Report> {
    cfg.validate()?;
    let manifest = load_manifest(cfg)?;
    manifest.verify()?;
    let target = cfg.kmeans.subsample_frames.unwrap_or(usize::MAX);
    let frames = subsample_frames(&manifest, target, cfg.kmeans.seed)?;
    let codebook = lloyd_fit(&frames, cfg.kmeans.k, &cfg.kmeans.fit_config())?;
    fsutil::create_dir_all(&cfg.paths.output_dir)?;
    let path = cfg.codebook_path();
    save_codebook(&codebook, &path)?;

    let meta = codebook.meta();
    let mut r = Report::default();
    r.line(format!(
        "k-means: k={} dim={} frames={} (of {}) seed={}",
        codebook.k(),
        codebook.dim(),
        frames.num_rows(),
        manifest.total_frames(),
        meta.seed
    ));
    r.line("iter  inertia");
    for (i, v) in meta.inertia_history.iter().enumerate() {
        r.line(format!("{i:>4}  {v:.6e}"));
    }
    r.line(format!(
        "final inertia {:.6e} after {} iterations",
        meta.final_inertia, meta.iterations_run
    ));
    r.line(format!("codebook: {}", path.display()));
    r.value("k", codebook.k());
    r.value("dim", codebook.dim());
    r.value("fit_frames", frames.num_rows());
    r.value("iterations", meta.iterations_run);
    for (i, v) in meta.inertia_history.iter().enumerate() {
        r.value(&format!("inertia.{i}"), v);
    }
    r.value("final_inertia", meta.final_inertia);
    Ok(r)
}

/// Trains the unigram subword model on the (de-duplicated, if configured)
/// token streams of the corpus.
pub fn train_subword(cfg: &PipelineConfig) -> Result<Report> {
    cfg.validate()?;
    let sw = cfg
        .reduction
        .subword
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("reduction.subword is not configured".into()))?;
    let manifest = load_manifest(cfg)?;
    let codebook = load_codebook(&cfg.codebook_path())?;
    let mut corpus = all_raw_tokens(&manifest, &codebook)?;
    if cfg.reduction.dedup {
        corpus = corpus.iter().map(dedup).collect::<Result<_>>()?;
    }
    let (model, train) = unigram_train(&corpus, sw.target_vocab, &sw.train_config())?;
    let path = cfg.subword_model_path();
    model.save(&path)?;

    let mut r = Report::default();
    r.line(format!(
        "subword: {} pieces ({} single, {} multi-token), target {}",
        model.len(),
        model.base_vocab_size(),
        model.num_multi_pieces(),
        sw.target_vocab
    ));
    for (i, phase) in train.em_phases.iter().enumerate() {
        let lls: Vec<String> = phase.iter().map(|v| format!("{v:.3}")).collect();
        r.line(format!("EM phase {i}: log-likelihood {}", lls.join(" -> ")));
    }
    r.line(format!("model: {}", path.display()));
    r.value("num_pieces", model.len());
    r.value("num_multi_pieces", model.num_multi_pieces());
    r.value("fingerprint", format!("{:016x}", model.fingerprint()));
    if let Some(ll) = train.em_phases.last().and_then(|p| p.last()) {
        r.value("final_log_likelihood", ll);
    }
    Ok(r)
}

struct Encoded {
    raw_len: usize,
    stored_len: usize,
    bytes: u64,
}

/// Quantizes every utterance, applies the configured reductions and masking,
/// and writes one packed token file per utterance.
pub fn encode(cfg: &PipelineConfig) -> Result<Report> {
    cfg.validate()?;
    let manifest = load_manifest(cfg)?;
    let codebook = load_codebook(&cfg.codebook_path())?;
    let model = match &cfg.reduction.subword {
        Some(_) => {
            let m = SubwordModel::load(&cfg.subword_model_path())?;
            if m.base_vocab_size() as usize != codebook.k() {
                return Err(Error::VocabMismatch {
                    expected: codebook.k() as u32,
                    got: m.base_vocab_size(),
                });
            }
            Some(m)
        }
        None => None,
    };
    let dir = cfg.tokens_dir();
    fsutil::create_dir_all(&dir)?;
    for stale in token_files(&dir)? {
        std::fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
    }
    let mask = cfg.masking.enabled.then(|| cfg.masking.mask_config());
    let flags = TokenFlags {
        deduped: cfg.reduction.dedup,
        subworded: model.is_some(),
        masked: mask.is_some(),
    };

    let per_utt: Vec<Encoded> = manifest
        .entries()
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let raw = raw_tokens(&manifest, e, &codebook)?;
            let reduced = if cfg.reduction.dedup { dedup(&raw)? } else { raw.clone() };
            let file = match (&model, &mask) {
                (Some(m), None) => pack_pieces(&subword_encode(m, &reduced)?, m, false),
                (Some(m), Some(mc)) => {
                    let symbols = subword_encode(m, &reduced)?.to_symbols(m)?;
                    let masked = time_mask(&symbols, mc, utterance_mask_seed(cfg.masking.seed, i))?;
                    pack(&masked.tokens, flags)
                }
                (None, Some(mc)) => {
                    let masked = time_mask(&reduced, mc, utterance_mask_seed(cfg.masking.seed, i))?;
                    pack(&masked.tokens, flags)
                }
                (None, None) => pack(&reduced, flags),
            };
            write_token_file(&file, &dir.join(format!("{}.dstk", e.utterance_id)))?;
            Ok(Encoded {
                raw_len: raw.len(),
                stored_len: file.header.num_tokens as usize,
                bytes: file.byte_len(),
            })
        })
        .collect::<Result<_>>()?;

    let n = per_utt.len();
    let raw_total: usize = per_utt.iter().map(|u| u.raw_len).sum();
    let stored_total: usize = per_utt.iter().map(|u| u.stored_len).sum();
    let bytes: u64 = per_utt.iter().map(|u| u.bytes).sum();
    let mean = |t: usize| if n == 0 { 0.0 } else { t as f64 / n as f64 };
    let reduction = if raw_total == 0 {
        0.0
    } else {
        1.0 - stored_total as f64 / raw_total as f64
    };

    let mut r = Report::default();
    r.line(format!(
        "encoded {n} utterances (dedup={}, subword={}, masked={})",
        flags.deduped, flags.subworded, flags.masked
    ));
    r.line(format!(
        "mean length {:.1} -> {:.1} ({:.1}% shorter), {} bytes on disk",
        mean(raw_total),
        mean(stored_total),
        100.0 * reduction,
        bytes
    ));
    r.line(format!("tokens: {}", dir.display()));
    r.value("num_utts", n);
    r.value("mean_raw_length", mean(raw_total));
    r.value("mean_stored_length", mean(stored_total));
    r.value("length_reduction", reduction);
    r.value("total_bytes", bytes);
    Ok(r)
}

/// Storage estimates for the configured hypothetical corpus, measured sizes
/// of the encoded token files, and average input lengths.
pub fn stats(cfg: &PipelineConfig) -> Result<Report> {
    cfg.validate()?;
    let mut r = Report::default();

    let secs = cfg.report.hypothetical_hours * 3600.0;
    let raw = size_bits(&SizeModel::raw_waveform(), secs)?;
    let ssl = size_bits(&SizeModel::ssl_features(), secs)?;
    let disc = size_bits(&SizeModel::discrete_tokens(), secs)?;
    let k_bits = bit_width(cfg.kmeans.k as u32);
    let disc_k = size_bits(
        &SizeModel::DiscreteTokens {
            token_bits: k_bits as u32,
            token_rate_hz: 50.0,
        },
        secs,
    )?;
    r.line(format!("hypothetical {} h corpus", cfg.report.hypothetical_hours));
    r.line(format!("{:<34} {:>20} {:>12}", "representation", "bits", "GB"));
    for (name, bits) in [
        ("raw waveform (16 bit, 16 kHz)", raw),
        ("SSL features (1024 x f32, 50 Hz)", ssl),
        ("discrete tokens (12 bit, 50 Hz)", disc),
    ] {
        r.line(format!("{name:<34} {bits:>20.0} {:>12.3}", bits_to_gb(bits)));
    }
    let with_k = format!("discrete tokens (k={}, {k_bits} bit)", cfg.kmeans.k);
    r.line(format!("{with_k:<34} {disc_k:>20.0} {:>12.3}", bits_to_gb(disc_k)));
    let ratio = if disc > 0.0 { raw / disc } else { 0.0 };
    r.line(format!("raw / token ratio: x{ratio:.1}"));
    r.value("hypothetical_hours", cfg.report.hypothetical_hours);
    r.value("hypothetical_raw_bits", raw);
    r.value("hypothetical_ssl_bits", ssl);
    r.value("hypothetical_token_bits", disc);
    r.value("hypothetical_token_gb", bits_to_gb(disc));
    r.value("hypothetical_token_bits_k", disc_k);
    r.value("raw_to_token_ratio", ratio);

    let manifest = load_manifest(cfg)?;
    let headers: Vec<_> = manifest
        .entries()
        .par_iter()
        .map(|e| read_feature_header(&manifest.resolve(e)))
        .collect::<Result<_>>()?;
    let duration: f64 = headers
        .iter()
        .map(|h| h.num_frames as f64 / h.frame_rate_hz as f64)
        .sum();
    let dir = cfg.tokens_dir();
    let measured = measure_corpus(&dir, Some(duration))?;
    let s = &measured.summary;
    r.line("");
    r.line(format!(
        "measured: {} ({:.1} s of speech)",
        dir.display(),
        measured.duration_s
    ));
    r.line(format!(
        "{} files, {} ids, {} bytes (header {}, run lengths {}, payload {}); as int32 {} bytes",
        s.num_files,
        s.num_ids,
        s.total_bytes(),
        s.header_bytes,
        s.run_length_bytes,
        s.payload_bytes,
        s.int32_bytes()
    ));
    let fmt_ratio = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("x{v:.1}"));
    r.line(format!(
        "vs raw waveform {}, vs SSL features {}",
        fmt_ratio(measured.ratio_vs_raw()),
        fmt_ratio(measured.ratio_vs_ssl())
    ));
    r.value("measured_duration_s", measured.duration_s);
    r.value("measured_files", s.num_files);
    r.value("measured_ids", s.num_ids);
    r.value("measured_bytes", s.total_bytes());
    r.value("measured_int32_bytes", s.int32_bytes());
    r.value("measured_ratio_vs_raw", measured.ratio_vs_raw().unwrap_or(0.0));
    r.value("measured_ratio_vs_ssl", measured.ratio_vs_ssl().unwrap_or(0.0));

    let before: Vec<(String, usize)> = manifest
        .entries()
        .iter()
        .map(|e| (e.utterance_id.clone(), e.num_frames as usize))
        .collect();
    let after: Vec<(String, usize)> = token_files(&dir)?
        .par_iter()
        .map(|p| {
            let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
            let header = crate::storage::PackedTokenFile::parse_header(&bytes)?;
            let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok((id, header.num_tokens as usize))
        })
        .collect::<Result<_>>()?;
    let split = cfg
        .manifest_path()
        .file_stem()
        .map_or("corpus".to_string(), |s| s.to_string_lossy().into_owned());
    let lengths = length_stats(&split, &before, &after)?;
    r.value("mean_input_length", lengths.mean_length);
    r.value("mean_frames", lengths.before_mean);
    r.value("length_reduction", lengths.reduction_fraction);
    let mut table = LengthStats::default();
    table.push(lengths);
    r.line("");
    r.text.push_str(&table.to_table());
    Ok(r)
}

/// Scores raw per-frame tokens against the phone labels.
pub fn eval(cfg: &PipelineConfig) -> Result<Report> {
    cfg.validate()?;
    let manifest = load_manifest(cfg)?;
    let codebook = load_codebook(&cfg.codebook_path())?;
    let labels = PhoneLabels::read(&cfg.phone_labels_path())?;
    let corpus = all_raw_tokens(&manifest, &codebook)?;
    let table = joint_counts(&corpus, &labels)?;
    let m = MetricReport::from_table(&table)?;
    let mut r = Report::default();
    r.text.push_str(&m.to_table());
    r.value("num_tokens", m.num_tokens);
    r.value("num_phones", m.num_phones);
    r.value("num_frames", m.num_frames);
    r.value("phone_purity", m.phone_purity);
    r.value("token_purity", m.token_purity);
    r.value("pnmi", m.pnmi);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_seeds_differ_per_utterance() {
        let a = utterance_mask_seed(7, 0);
        assert_ne!(a, utterance_mask_seed(7, 1));
        assert_ne!(a, utterance_mask_seed(8, 0));
        assert_eq!(a, utterance_mask_seed(7, 0));
    }
}
