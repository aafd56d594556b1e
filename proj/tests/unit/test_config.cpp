#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "anaflow/config.hpp"
#include "anaflow/errors.hpp"

using namespace anaflow;

TEST(Config, DefaultsWhenNothingIsSet) {
    const auto c = load_config({}, {}, {});
    EXPECT_DOUBLE_EQ(c.vdd, 5.0);
    EXPECT_EQ(c.generator, "replay");
    EXPECT_EQ(c.concurrency, 1);
    EXPECT_EQ(c.output, OutputFormat::Text);
    EXPECT_FALSE(c.inverter_standard);
    EXPECT_TRUE(c.remote.api_key.empty());
}

TEST(Config, ParsesFileWithCommentsAndBlankLines) {
    const auto s = parse_config_text("# run settings\n\nvdd = 3.3\nlibrary=lib.txt   # trailing\n  model = m-1\n");
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.at("vdd"), "3.3");
    EXPECT_EQ(s.at("library"), "lib.txt");
    EXPECT_EQ(s.at("model"), "m-1");
}

TEST(Config, FileErrorsCarryLineNumber) {
    try {
        parse_config_text("vdd = 5\n\nnot a pair\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("config line 3"), std::string::npos);
    }
    try {
        parse_config_text("colour = red\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("config line 1: unknown key 'colour'"), std::string::npos);
    }
}

TEST(Config, TokenInFileIsRejected) {
    try {
        parse_config_text("vdd=5\napi_key = sk-secret\n");
        FAIL();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("config line 2"), std::string::npos);
        EXPECT_NE(msg.find("ANAFLOW_API_KEY"), std::string::npos);
        EXPECT_EQ(msg.find("sk-secret"), std::string::npos);
    }
}

TEST(Config, PrecedenceFlagsOverEnvOverFile) {
    const Settings file{{"vdd", "3.0"}, {"concurrency", "2"}, {"model", "file-model"}};
    const std::map<std::string, std::string> env{{"ANAFLOW_VDD", "4.0"}, {"ANAFLOW_MODEL", "env-model"}};
    const Settings flags{{"vdd", "1.8"}};
    const auto c = load_config(file, env, flags);
    EXPECT_DOUBLE_EQ(c.vdd, 1.8);
    EXPECT_EQ(c.remote.model, "env-model");
    EXPECT_EQ(c.concurrency, 2);
}

TEST(Config, EnvironmentKeysAreUpperCase) {
    const auto c = load_config({}, {{"ANAFLOW_INVERTER_STANDARD", "true"}, {"ANAFLOW_OUTPUT", "json-lines"},
                                    {"ANAFLOW_TOP_P", "0.9"}, {"ANAFLOW_LIBRARY", "/tmp/l"}},
                               {});
    EXPECT_TRUE(c.inverter_standard);
    EXPECT_EQ(c.output, OutputFormat::JsonLines);
    EXPECT_DOUBLE_EQ(c.remote.top_p, 0.9);
    EXPECT_EQ(c.library_path, "/tmp/l");
}

TEST(Config, ValidationRejectsBadValues) {
    EXPECT_THROW(load_config({}, {}, {{"vdd", "0"}}), ConfigError);
    EXPECT_THROW(load_config({}, {}, {{"vdd", "-1"}}), ConfigError);
    EXPECT_THROW(load_config({}, {}, {{"vdd", "five"}}), ConfigError);
    EXPECT_THROW(load_config({}, {}, {{"concurrency", "0"}}), ConfigError);
    EXPECT_THROW(load_config({}, {}, {{"concurrency", "2.5"}}), ConfigError);
    EXPECT_THROW(load_config({}, {}, {{"generator", "magic"}}), ConfigError);
    EXPECT_THROW(load_config({}, {}, {{"output", "xml"}}), ConfigError);
    EXPECT_THROW(load_config({}, {}, {{"inverter_standard", "maybe"}}), ConfigError);
}

TEST(Config, RemoteNeedsTokenFromEnvironment) {
    auto c = load_config({}, {}, {{"generator", "remote"}});
    try {
        require_api_key(c, {});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("ANAFLOW_API_KEY"), std::string::npos);
    }
    require_api_key(c, {{"ANAFLOW_API_KEY", "tok"}});
    EXPECT_EQ(c.remote.api_key, "tok");
}

TEST(Config, ReadsFileAndPrefixesPath) {
    const auto path = (std::filesystem::temp_directory_path() / "anaflow_cfg_test.conf").string();
    {
        std::ofstream(path) << "vdd = 2.5\nbogus\n";
    }
    try {
        read_config_file(path);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find(path + ": config line 2"), std::string::npos);
    }
    {
        std::ofstream(path) << "vdd = 2.5\n";
    }
    EXPECT_EQ(read_config_file(path).at("vdd"), "2.5");
    std::filesystem::remove(path);
    EXPECT_THROW(read_config_file(path), ConfigError);
}

TEST(Config, ProcessEnvironmentKeepsOnlyPrefixed) {
    ::setenv("ANAFLOW_TEST_PROBE", "x", 1);
    const auto env = process_environment();
    EXPECT_EQ(env.at("ANAFLOW_TEST_PROBE"), "x");
    for (const auto& [k, v] : env) EXPECT_EQ(k.rfind("ANAFLOW_", 0), 0u);
    ::unsetenv("ANAFLOW_TEST_PROBE");
}
