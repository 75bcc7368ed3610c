#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "surgkin/serialize.hpp"
#include "surgkin/snn.hpp"

using namespace surgkin;

int main(int argc, char** argv) {
    CLI::App app{"sparse kinematic event encoding, classification, and "
                 "spiking conversion"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::size_t jobs = 1;
    app.add_option("-c,--config", config_path, "config file (key = value)");
    app.add_option("-s,--set", overrides,
                   "override a config key, e.g. --set train.max_epochs=5");
    app.add_option("-j,--jobs", jobs, "worker count for gen/ablate");

    bool eval_snn = false;
    auto* gen = app.add_subcommand("gen", "generate the synthetic log corpus");
    auto* encode = app.add_subcommand("encode", "event-encode the corpus");
    auto* train = app.add_subcommand("train", "train a classifier");
    auto* convert = app.add_subcommand("convert", "convert the trained model "
                                                  "to a spiking network");
    auto* eval = app.add_subcommand("eval", "evaluate on the held-out split");
    eval->add_flag("--snn", eval_snn, "evaluate the converted spiking network");
    auto* ablate = app.add_subcommand("ablate", "leave-one-feature-out sweep");
    auto* embed = app.add_subcommand("embed", "t-SNE of the 16-dim embeddings");
    auto* repro = app.add_subcommand("repro", "full pipeline + pass/fail table");

    CLI11_PARSE(app, argc, argv);

    try {
        Config raw;
        if (!config_path.empty()) raw = Config::load(config_path);
        for (const auto& o : overrides) raw.apply_override(o);

        cli::Context ctx;
        ctx.cfg = RunConfig::from_config(raw);
        ctx.jobs = jobs < 1 ? 1 : jobs;
        if (const char* env = std::getenv("SURGKIN_OUT"))
            ctx.cfg.output_dir = env;

        if (gen->parsed()) cli::cmd_gen(ctx);
        else if (encode->parsed()) cli::cmd_encode(ctx);
        else if (train->parsed()) cli::cmd_train(ctx);
        else if (convert->parsed()) cli::cmd_convert(ctx);
        else if (eval->parsed()) cli::cmd_eval(ctx, eval_snn);
        else if (ablate->parsed()) cli::cmd_ablate(ctx);
        else if (embed->parsed()) cli::cmd_embed(ctx);
        else if (repro->parsed()) cli::cmd_repro(ctx);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const cli::DependencyError& e) {
        std::cerr << "dependency error: " << e.what() << "\n";
        return 3;
    } catch (const FormatError& e) {
        std::cerr << "dependency error: " << e.what() << "\n";
        return 3;
    } catch (const TrainingError& e) {
        std::cerr << "training failure: " << e.what() << "\n";
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const ConversionError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
