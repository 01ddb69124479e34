#include "doctest.h"

#include "json.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const std::string cli = DELALA_CLI;
const std::string configs = DELALA_CONFIG_DIR;

struct Outcome {
    int code = -1;
    std::string out;
};

Outcome run(const std::string& args) {
    const auto out_path = std::filesystem::temp_directory_path() / "delala_cli_stdout.txt";
    const std::string command = "\"" + cli + "\" " + args + " > \"" + out_path.string() + "\" 2>/dev/null";
    const int status = std::system(command.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    o.out = buf.str();
    std::filesystem::remove(out_path);
    return o;
}

std::string iris() {
    return "--config \"" + configs + "/iris.conf\"";
}

}  // namespace

TEST_CASE("successful verbs exit with 0") {
    const auto json = run("run " + iris() + " --format json --canonical");
    REQUIRE(json.code == 0);
    const auto parsed = nlohmann::json::parse(json.out);
    CHECK(parsed.at("pipeline") == "delala");

    const auto csv = run("run " + iris() + " --format csv");
    CHECK(csv.code == 0);
    CHECK(csv.out.rfind("dataset,pipeline,repeat,accuracy", 0) == 0);

    const auto human = run("run " + iris() + " --format human --w 0.7");
    CHECK(human.code == 0);
    CHECK(human.out.find("per-class accuracy") != std::string::npos);

    CHECK(run("inspect-forest " + iris()).out.rfind("node,parent,rho,delta,gamma,layer,tree_id", 0) == 0);
    CHECK(run("select " + iris()).code == 0);

    const auto sweep = run("sweep " + iris() + " --param l --values 9,12 --format csv");
    CHECK(sweep.code == 0);
}

TEST_CASE("flags override the config file") {
    const auto a = nlohmann::json::parse(run("run " + iris() + " --format json --canonical").out);
    const auto b = nlohmann::json::parse(run("run " + iris() + " --l 15 --format json --canonical").out);
    CHECK(a.at("config").at("l") == "12");
    CHECK(b.at("config").at("l") == "15");
}

TEST_CASE("configuration errors exit with 2") {
    CHECK(run("run --config /nonexistent/none.conf").code == 2);
    CHECK(run("run " + iris() + " --w 3").code == 2);
    CHECK(run("run " + iris() + " --pipeline magic").code == 2);
    CHECK(run("run " + iris() + " --no-such-flag 1").code == 2);
    CHECK(run("run " + iris() + " --format xml").code == 2);
    CHECK(run("sweep " + iris() + " --param bogus --values 1").code == 2);
    // Three classes times k = 3 cannot fit in six labels.
    CHECK(run("run " + iris() + " --l 6").code == 2);
}

TEST_CASE("data errors exit with 3") {
    CHECK(run("run " + iris() + " --dataset /nonexistent/missing.csv").code == 3);
    CHECK(run("run " + iris() + " --output /nonexistent/dir/report.json").code == 3);
}

TEST_CASE("training errors exit with 4") {
    CHECK(run("run " + iris() + " --lambda 1e300").code == 4);
}

TEST_CASE("canonical reports are byte-identical across invocations") {
    for (const char* name : {"iris", "wine"}) {
        const std::string args = std::string("run --config \"") + configs + "/" + name +
                                 ".conf\" --format json --canonical";
        const auto a = run(args);
        const auto b = run(args);
        REQUIRE(a.code == 0);
        CHECK(a.out == b.out);
    }
}
