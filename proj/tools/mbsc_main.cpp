// mbsc: train / encode / decode / eval / inspect for the multi-band
// spectral residual codec. Exit codes: 0 ok, 2 usage, 3 data, 4 numerical.
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbsc/bitstream.hpp"
#include "mbsc/checkpoint.hpp"
#include "mbsc/metrics.hpp"
#include "mbsc/model.hpp"
#include "mbsc/quantizer.hpp"
#include "mbsc/synthetic.hpp"
#include "mbsc/trainer.hpp"
#include "mbsc/wav.hpp"

namespace {

using namespace mbsc;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct TrainOptions {
    std::vector<std::string> corpus;
    bool synthetic = false;
    std::string out_prefix = "mbsc_run";
    int steps = 200;
    int batch = 4;
    int segment = 3200;
    uint64_t seed = 1;
    int stages = 4;
    int bits = 9;
    std::string mode = "mbs";
    std::string activation = "amplitude_bias";
    std::vector<int> strides{2, 4, 5, 8};
    int base_channels = 16;
    int latent_dim = 32;
    std::vector<int> mrf_kernels{3, 7};
    std::vector<int> mrf_dilations{1, 3};
    int expansion = 4;
    int groups = 4;
    int sample_rate = 24000;
    double lambda_commit = 0.25;
    double lr = 2e-4;
    int corpus_size = 0;
    int log_every = 20;
};

SnakeMode activation_from_flag(const std::string& s) {
    if (s == "vanilla") return SnakeMode::vanilla;
    if (s == "amplitude") return SnakeMode::amplitude;
    if (s == "amplitude_bias") return SnakeMode::amplitude_bias;
    throw CLI::ValidationError("--activation", "must be vanilla, amplitude or amplitude_bias");
}

// Banded stages use the dyadic 4/2/1 split; anything past three stages
// quantizes the full residual.
BandPlan plan_for(const ModelConfig& cfg, int stages) {
    std::vector<unsigned> ratios{4, 2, 1};
    unsigned banded = static_cast<unsigned>(std::min(stages, 3));
    ratios.resize(banded);
    return make_band_plan(cfg.latent_rate(), ratios, static_cast<unsigned>(stages) - banded);
}

void print_bitrate(const BitrateInfo& info) {
    std::printf("frame rate      %g Hz (%u/%u)\n", info.frame_rate, info.frame_rate_num,
                info.frame_rate_den);
    std::printf("tokens per sec  %g\n", info.tokens_per_second);
    std::printf("bits per sec    %g\n", info.bits_per_second);
}

std::vector<std::vector<double>> segments_from_corpus(const TrainOptions& opt, Rng& rng) {
    std::vector<std::vector<double>> segments;
    if (opt.synthetic) {
        int count = std::max(opt.batch, opt.corpus_size);
        for (int i = 0; i < count; ++i)
            segments.push_back(synthetic_segment(rng, opt.sample_rate, opt.segment).samples);
        return segments;
    }
    for (const std::string& path : opt.corpus) {
        AudioBuffer audio = read_wav(path);
        if (audio.sample_rate != opt.sample_rate)
            throw std::runtime_error(path + ": sample rate " + std::to_string(audio.sample_rate) +
                                     " does not match configured " + std::to_string(opt.sample_rate) +
                                     " (no resampling)");
        size_t n_full = audio.samples.size() / static_cast<size_t>(opt.segment);
        for (size_t s = 0; s < n_full; ++s) {
            auto begin = audio.samples.begin() + static_cast<std::ptrdiff_t>(s * opt.segment);
            segments.emplace_back(begin, begin + opt.segment);
        }
    }
    if (segments.empty())
        throw std::runtime_error("corpus yielded no full segments of " +
                                 std::to_string(opt.segment) + " samples");
    return segments;
}

int cmd_train(const TrainOptions& opt) {
    ModelConfig cfg;
    cfg.strides = opt.strides;
    cfg.base_channels = opt.base_channels;
    cfg.latent_dim = opt.latent_dim;
    cfg.mrf_kernels = opt.mrf_kernels;
    cfg.mrf_dilations = opt.mrf_dilations;
    cfg.bottleneck_expansion = opt.expansion;
    cfg.conv_groups = opt.groups;
    cfg.sample_rate = opt.sample_rate;
    cfg.activation = activation_from_flag(opt.activation);
    cfg.validate();
    if (!opt.synthetic && opt.corpus.empty())
        throw CLI::RequiredError("either a corpus of wav files or --synthetic");
    if (opt.segment % cfg.downsampling() != 0)
        throw CLI::ValidationError("--segment", "must be a multiple of the total stride product " +
                                                    std::to_string(cfg.downsampling()));
    if (opt.steps < 1 || opt.batch < 1)
        throw CLI::ValidationError("--steps", "steps and batch must be positive");

    QuantizerMode qmode = opt.mode == "vanilla" ? QuantizerMode::vanilla : QuantizerMode::mbs;
    QuantizerStack stack = make_quantizer_stack(plan_for(cfg, opt.stages), cfg.latent_dim, opt.bits, qmode);

    Rng rng(opt.seed);
    std::vector<std::vector<double>> segments = segments_from_corpus(opt, rng);

    Model model(cfg);
    model.init(rng);

    TrainerConfig tcfg;
    tcfg.lambda_commit = opt.lambda_commit;
    tcfg.adam.lr = opt.lr;
    Trainer trainer(model, stack, tcfg, opt.seed + 1);

    std::string csv_path = opt.out_prefix + "_loss.csv";
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot open " + csv_path);
    csv << "step,total,mel,commitment\n";

    std::printf("training %d steps, batch %d, %zu segments, %zu parameters\n", opt.steps, opt.batch,
                segments.size(), model.parameter_count());
    for (int step = 1; step <= opt.steps; ++step) {
        std::vector<std::vector<double>> batch;
        batch.reserve(static_cast<size_t>(opt.batch));
        for (int b = 0; b < opt.batch; ++b)
            batch.push_back(segments[rng.index(segments.size())]);
        TrainStepReport rep = trainer.step(batch);
        csv << step << ',' << rep.total << ',' << rep.mel << ',' << rep.commitment << '\n';
        if (step == 1 || step == opt.steps || step % opt.log_every == 0)
            std::printf("step %4d  total %.6f  mel %.6f  commit %.6f\n", step, rep.total, rep.mel,
                        rep.commitment);
    }
    csv.flush();

    std::string ckpt_path = opt.out_prefix + ".mfae";
    std::string quant_path = opt.out_prefix + ".mbsq";
    save_checkpoint(ckpt_path, model, stack);
    save_quantizer(quant_path, stack);
    std::printf("wrote %s, %s, %s\n", ckpt_path.c_str(), quant_path.c_str(), csv_path.c_str());
    return 0;
}

TokenStream run_encode(const Checkpoint& ck, const AudioBuffer& audio) {
    LatentTensor z = encode(audio, ck.model);
    QuantizerStack stack = ck.stack; // encode mutates nothing, but takes non-const for EMA reuse
    EncodeResult res = stack.mode == QuantizerMode::vanilla ? vanilla_rvq_encode(z.values, stack)
                                                            : mbs_rvq_encode(z.values, stack);
    res.tokens.frame_rate = z.latent_rate;
    return res.tokens;
}

int cmd_encode(const std::string& model_path, const std::string& wav_path,
               const std::string& out_path) {
    Checkpoint ck = load_checkpoint(model_path);
    AudioBuffer audio = read_wav(wav_path);
    if (audio.sample_rate != ck.config.sample_rate)
        throw std::runtime_error("input is " + std::to_string(audio.sample_rate) + " Hz but the model expects " +
                                 std::to_string(ck.config.sample_rate) + " Hz (no resampling)");
    if (audio.samples.empty()) throw std::runtime_error("input has no samples");

    TokenStream tokens = run_encode(ck, audio);

    BitrateInfo info = bitrate(ck.config, static_cast<int>(ck.stack.n_stages()), ck.stack.bits());
    StreamHeader header;
    header.sample_rate = static_cast<uint32_t>(ck.config.sample_rate);
    header.frame_rate_num = info.frame_rate_num;
    header.frame_rate_den = info.frame_rate_den;
    header.n_stages = static_cast<uint8_t>(ck.stack.n_stages());
    header.bits_per_code = static_cast<uint8_t>(ck.stack.bits());
    header.frame_count = static_cast<uint32_t>(tokens.frames);
    header.config_hash = make_config_hash(fnv1a32(config_to_text(ck.config)),
                                          static_cast<uint32_t>(audio.samples.size()));

    std::vector<uint8_t> bytes = serialize(tokens, header);
    write_file_bytes(out_path, bytes);

    std::printf("%d frames, %d tokens -> %s (%zu bytes)\n", tokens.frames,
                tokens.frames * tokens.n_stages, out_path.c_str(), bytes.size());
    print_bitrate(info);
    return 0;
}

int cmd_decode(const std::string& model_path, const std::string& stream_path,
               const std::string& out_path, const std::vector<int>& stages, bool float32) {
    Checkpoint ck = load_checkpoint(model_path);
    auto [tokens, header] = deserialize(read_file_bytes(stream_path));

    uint32_t expect_fnv = fnv1a32(config_to_text(ck.config));
    if (config_hash_fnv(header.config_hash) != expect_fnv)
        throw std::runtime_error("bitstream was produced by a different model configuration "
                                 "(config hash mismatch)");
    if (tokens.n_stages != static_cast<int>(ck.stack.n_stages()) || tokens.bits != ck.stack.bits())
        throw std::runtime_error("bitstream stage layout does not match the checkpoint quantizer");

    std::vector<bool> seen(static_cast<size_t>(tokens.n_stages) + 1, false);
    for (int s : stages) {
        if (s < 1 || s > tokens.n_stages)
            throw CLI::ValidationError("--stages", "stage " + std::to_string(s) + " out of range 1.." +
                                                       std::to_string(tokens.n_stages));
        if (seen[static_cast<size_t>(s)])
            throw CLI::ValidationError("--stages", "stage " + std::to_string(s) + " listed twice");
        seen[static_cast<size_t>(s)] = true;
    }

    Tensor zq = stages.empty() ? mbs_rvq_decode(tokens, ck.stack)
                               : subset_decode(tokens, ck.stack, stages);
    LatentTensor z{std::move(zq), ck.config.latent_rate()};
    AudioBuffer audio = decode_latent(z, ck.model);

    uint32_t original = config_hash_samples(header.config_hash);
    if (original > 0) {
        if (original > audio.samples.size())
            throw std::runtime_error("header claims more samples than the stream decodes to");
        audio.samples.resize(original);
    }
    write_wav(out_path, audio, float32 ? WavFormat::float32 : WavFormat::pcm16);
    std::printf("wrote %s (%zu samples", out_path.c_str(), audio.samples.size());
    if (stages.empty())
        std::printf(", all %d stages)\n", tokens.n_stages);
    else
        std::printf(", %zu of %d stages)\n", stages.size(), tokens.n_stages);
    return 0;
}

int cmd_eval(const std::string& ref_path, const std::string& est_path, const std::string& csv_path) {
    AudioBuffer ref = read_wav(ref_path);
    AudioBuffer est = read_wav(est_path);

    double sd = stft_distance(ref, est);
    MelLossReport mel = mel_distance_report(ref, est);
    double snr_db = snr(ref, est);

    std::printf("stft_distance  %.6f\n", sd);
    std::printf("mel_distance   %.6f\n", mel.total);
    for (size_t i = 0; i < mel.scales.size(); ++i)
        std::printf("  window %5d  %.6f\n", 1 << mel.scales[i], mel.per_scale[i]);
    std::printf("snr_db         %.4f\n", snr_db);

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path, std::ios::trunc);
        if (!csv) throw std::runtime_error("cannot open " + csv_path);
        csv << "stft_distance,mel_distance";
        for (int s : mel.scales) csv << ",mel_s" << s;
        csv << ",snr_db\n";
        csv << sd << ',' << mel.total;
        for (double v : mel.per_scale) csv << ',' << v;
        csv << ',' << snr_db << "\n";
    }
    return 0;
}

bool sniff_magic(const std::string& path, const char* magic) {
    std::ifstream f(path, std::ios::binary);
    char head[4] = {0, 0, 0, 0};
    f.read(head, 4);
    return f && std::equal(head, head + 4, magic);
}

void inspect_checkpoint(Checkpoint& ck) {
    std::printf("checkpoint configuration:\n%s", config_to_text(ck.config).c_str());
    std::printf("parameters      %zu\n", ck.model.parameter_count());
    std::printf("latent rate     %g Hz\n", ck.config.latent_rate());

    const QuantizerStack& q = ck.stack;
    std::printf("quantizer       %zu stages, %d bits, %s mode\n", q.n_stages(), q.bits(),
                q.mode == QuantizerMode::vanilla ? "vanilla" : "mbs");
    for (size_t k = 0; k < q.n_stages(); ++k) {
        BandRange b = stage_band(q.plan, k);
        int live = 0;
        for (double c : q.codebooks[k].ema_counts)
            if (c >= 1e-3) ++live;
        std::printf("  stage %zu: %s band [%g, %g] Hz, %d/%d live codes\n", k + 1,
                    q.plan.is_banded_stage(k) ? "projected" : "full", b.f_min, b.f_max, live,
                    q.codebooks[k].entries());
    }
    print_bitrate(bitrate(ck.config, static_cast<int>(q.n_stages()), q.bits()));
}

void inspect_tokens(const TokenStream& tokens, const StreamHeader& header) {
    std::printf("token stream: %u frames, %u stages, %u bits per code\n", header.frame_count,
                header.n_stages, header.bits_per_code);
    std::printf("sample rate     %u Hz\n", header.sample_rate);
    double frame_rate = static_cast<double>(header.frame_rate_num) / header.frame_rate_den;
    std::printf("frame rate      %g Hz (%u/%u)\n", frame_rate, header.frame_rate_num,
                header.frame_rate_den);
    std::printf("tokens per sec  %g\n", frame_rate * header.n_stages);
    std::printf("bits per sec    %g\n", frame_rate * header.n_stages * header.bits_per_code);
    std::printf("config fnv      %08x\n", config_hash_fnv(header.config_hash));
    std::printf("source samples  %u\n", config_hash_samples(header.config_hash));

    TokenStatistics st = token_statistics(tokens);
    std::printf("per-stage token statistics:\n");
    for (size_t k = 0; k < st.entropy_bits.size(); ++k) {
        int used = 0;
        for (long c : st.usage[k])
            if (c > 0) ++used;
        std::printf("  stage %zu: entropy %.4f bits, perplexity %.2f, %d/%zu used\n", k + 1,
                    st.entropy_bits[k], st.perplexity[k], used, st.usage[k].size());
    }
    double total_h = 0.0;
    for (double h : st.entropy_bits) total_h += h;
    std::printf("entropy accounting: sum H = %.4f bits/frame vs rate %d bits/frame; bound %.4f\n",
                total_h, tokens.n_stages * tokens.bits, total_h);
}

int cmd_inspect(const std::vector<std::string>& paths, const std::string& audio_path,
                const std::vector<double>& thresholds, const std::vector<double>& offsets) {
    std::string ckpt_path, stream_path;
    for (const std::string& p : paths) {
        if (sniff_magic(p, "MFAE"))
            ckpt_path = p;
        else if (sniff_magic(p, "MBST"))
            stream_path = p;
        else
            throw std::runtime_error(p + ": not a checkpoint or token stream");
    }

    std::optional<Checkpoint> ck;
    if (!ckpt_path.empty()) {
        ck.emplace(load_checkpoint(ckpt_path));
        inspect_checkpoint(*ck);
    }
    if (!stream_path.empty()) {
        auto [tokens, header] = deserialize(read_file_bytes(stream_path));
        if (ck) {
            bool match = config_hash_fnv(header.config_hash) == fnv1a32(config_to_text(ck->config));
            std::printf("config hash     %s\n", match ? "matches checkpoint" : "DOES NOT MATCH checkpoint");
        }
        inspect_tokens(tokens, header);

        if (ck && !audio_path.empty()) {
            AudioBuffer x = read_wav(audio_path);
            if (x.sample_rate != ck->config.sample_rate)
                throw std::runtime_error("--audio sample rate does not match the model");
            Tensor zq = mbs_rvq_decode(tokens, ck->stack);
            AudioBuffer xhat = decode_latent({std::move(zq), ck->config.latent_rate()}, ck->model);
            uint32_t original = config_hash_samples(header.config_hash);
            if (original > 0 && original <= xhat.samples.size()) xhat.samples.resize(original);
            if (xhat.samples.size() != x.samples.size())
                throw std::runtime_error("--audio length does not match the decoded stream");
            PerceptualEntropyReport rep =
                perceptual_entropy_report(x, xhat, tokens, ck->stack.plan, thresholds, offsets);
            std::printf("perceptual entropy report:\n%s", rep.to_text().c_str());
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-band spectral residual audio codec"};
    app.require_subcommand(1);

    TrainOptions topt;
    CLI::App* train = app.add_subcommand("train", "train a model on wav files or synthetic tones");
    train->add_option("corpus", topt.corpus, "input wav files")->check(CLI::ExistingFile);
    train->add_flag("--synthetic", topt.synthetic, "train on generated sinusoid mixtures");
    train->add_option("-o,--out", topt.out_prefix, "output prefix for .mfae/.mbsq/_loss.csv");
    train->add_option("--steps", topt.steps, "optimizer steps");
    train->add_option("--batch", topt.batch, "segments per step");
    train->add_option("--segment", topt.segment, "segment length in samples");
    train->add_option("--seed", topt.seed, "seed for init, corpus and sampling");
    train->add_option("--stages", topt.stages, "quantizer stages")->check(CLI::Range(1, 16));
    train->add_option("--bits", topt.bits, "bits per code")->check(CLI::Range(1, 16));
    train->add_option("--mode", topt.mode, "quantizer mode")
        ->check(CLI::IsMember({"mbs", "vanilla"}));
    train->add_option("--activation", topt.activation, "snake parameterization")
        ->check(CLI::IsMember({"vanilla", "amplitude", "amplitude_bias"}));
    train->add_option("--strides", topt.strides, "encoder strides")->delimiter(',');
    train->add_option("--base-channels", topt.base_channels, "channel width");
    train->add_option("--latent-dim", topt.latent_dim, "latent dimension");
    train->add_option("--mrf-kernels", topt.mrf_kernels, "fusion kernel sizes")->delimiter(',');
    train->add_option("--mrf-dilations", topt.mrf_dilations, "fusion dilations")->delimiter(',');
    train->add_option("--expansion", topt.expansion, "bottleneck expansion");
    train->add_option("--groups", topt.groups, "grouped conv groups");
    train->add_option("--sample-rate", topt.sample_rate, "audio sample rate");
    train->add_option("--lambda-commit", topt.lambda_commit, "commitment loss weight");
    train->add_option("--lr", topt.lr, "Adam learning rate");
    train->add_option("--corpus-size", topt.corpus_size, "synthetic segments to generate");
    train->add_option("--log-every", topt.log_every, "progress print interval");
    train->set_config("--config", "", "key=value option file (unknown keys rejected)");

    std::string enc_model, enc_wav, enc_out;
    CLI::App* encode_cmd = app.add_subcommand("encode", "encode a wav file to a token stream");
    encode_cmd->add_option("model", enc_model, "checkpoint (.mfae)")->required()->check(CLI::ExistingFile);
    encode_cmd->add_option("input", enc_wav, "mono wav at the model rate")->required()->check(CLI::ExistingFile);
    encode_cmd->add_option("output", enc_out, "token stream (.mbst)")->required();

    std::string dec_model, dec_stream, dec_out;
    std::vector<int> dec_stages;
    bool dec_float32 = false;
    CLI::App* decode_cmd = app.add_subcommand("decode", "decode a token stream to wav");
    decode_cmd->add_option("model", dec_model, "checkpoint (.mfae)")->required()->check(CLI::ExistingFile);
    decode_cmd->add_option("input", dec_stream, "token stream (.mbst)")->required()->check(CLI::ExistingFile);
    decode_cmd->add_option("output", dec_out, "output wav")->required();
    decode_cmd->add_option("--stages", dec_stages, "1-based stage subset, e.g. 1,2")->delimiter(',');
    decode_cmd->add_flag("--float32", dec_float32, "write 32-bit float samples instead of pcm16");

    std::string eval_ref, eval_est, eval_csv;
    CLI::App* eval_cmd = app.add_subcommand(
        "eval", "compare two aligned wav files; csv columns: "
                "stft_distance,mel_distance,mel_s7..mel_s11,snr_db");
    eval_cmd->add_option("reference", eval_ref, "reference wav")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("estimate", eval_est, "estimate wav")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--csv", eval_csv, "also write one-row csv here");

    std::vector<std::string> ins_paths;
    std::string ins_audio;
    std::vector<double> ins_thresholds, ins_offsets;
    CLI::App* inspect_cmd = app.add_subcommand("inspect", "report on checkpoints and token streams");
    inspect_cmd->add_option("files", ins_paths, "checkpoint (.mfae) and/or token stream (.mbst)")
        ->required()
        ->expected(1, 2)
        ->check(CLI::ExistingFile);
    inspect_cmd->add_option("--audio", ins_audio, "source wav for the distortion column")
        ->check(CLI::ExistingFile);
    inspect_cmd->add_option("--thresholds", ins_thresholds, "per-stage distortion thresholds")
        ->delimiter(',');
    inspect_cmd->add_option("--offsets", ins_offsets, "per-stage masking offsets")->delimiter(',');

    try {
        app.parse(argc, argv);
        if (*train) return cmd_train(topt);
        if (*encode_cmd) return cmd_encode(enc_model, enc_wav, enc_out);
        if (*decode_cmd) return cmd_decode(dec_model, dec_stream, dec_out, dec_stages, dec_float32);
        if (*eval_cmd) return cmd_eval(eval_ref, eval_est, eval_csv);
        if (*inspect_cmd) return cmd_inspect(ins_paths, ins_audio, ins_thresholds, ins_offsets);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const NumericalAbort& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return 0;
}
