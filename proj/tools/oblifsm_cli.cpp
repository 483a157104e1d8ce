// Command-line front end: plaintext evaluation, offline garbling, networked
// protocol runs and the scaling benchmark.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oblifsm/oblifsm.hpp"

namespace {

using namespace oblifsm;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::parse, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::parse, "cannot write " + path);
  out << data;
}

void write_file(const std::string& path, const Bytes& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::parse, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
}

std::vector<std::uint32_t> load_input(const std::string& path, const std::string& byte_map_path) {
  std::string text = read_file(path);
  if (byte_map_path.empty()) {
    // strip trailing newline(s)
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return parse_symbol_line(text);
  }
  nlohmann::json j = nlohmann::json::parse(read_file(byte_map_path));
  if (!j.is_array() || j.size() != 256) fail(Errc::parse, "byte map must be a 256-entry array");
  std::array<std::int32_t, 256> table{};
  for (std::size_t i = 0; i < 256; ++i) table[i] = j[i].get<std::int32_t>();
  ByteView raw(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
  return map_raw_bytes(raw, table);
}

std::pair<std::string, std::uint16_t> parse_hostport(const std::string& s) {
  const std::size_t colon = s.rfind(':');
  if (colon == std::string::npos) fail(Errc::parse, "expected HOST:PORT, got " + s);
  const std::string host = s.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(s.substr(colon + 1));
  } catch (const std::exception&) {
    fail(Errc::parse, "bad port in " + s);
  }
  if (port <= 0 || port > 65535) fail(Errc::parse, "bad port in " + s);
  return {host, static_cast<std::uint16_t>(port)};
}

nlohmann::json params_to_json(const SessionParams& p) {
  nlohmann::json j;
  j["num_states"] = p.num_states;
  j["alphabet_size"] = p.alphabet_size;
  j["input_length"] = p.garbling.input_length;
  j["key_bits"] = p.garbling.key_bits;
  j["output_field_bytes"] = p.garbling.output_field_bytes;
  j["he_bits"] = p.he_bits;
  j["output_mode"] = p.output.mode == OutputMode::mealy ? "mealy" : "accept";
  j["output_arity"] = p.output.arity;
  j["output_alphabet_size"] = p.output.alphabet;
  return j;
}

SessionParams params_from_json(const nlohmann::json& j) {
  SessionParams p;
  try {
    p.num_states = j.at("num_states").get<std::uint32_t>();
    p.alphabet_size = j.at("alphabet_size").get<std::uint32_t>();
    p.garbling.input_length = j.at("input_length").get<std::uint32_t>();
    p.garbling.key_bits = j.at("key_bits").get<std::uint32_t>();
    p.garbling.output_field_bytes = j.at("output_field_bytes").get<std::uint32_t>();
    p.garbling.state_field_bytes = GarblingParams::state_bytes_for(p.num_states);
    p.he_bits = j.at("he_bits").get<std::uint32_t>();
    const std::string mode = j.at("output_mode").get<std::string>();
    p.output.mode = mode == "mealy" ? OutputMode::mealy : OutputMode::accept;
    p.output.arity = j.at("output_arity").get<std::uint32_t>();
    p.output.alphabet = j.at("output_alphabet_size").get<std::uint32_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("bad params document: ") + e.what());
  }
  p.check();
  return p;
}

void print_opened(const OpenedOutput& o) {
  if (o.mode == OutputMode::accept) {
    std::cout << "accept_bit: " << o.accept_bit << "\n";
    return;
  }
  std::cout << "step_outputs:";
  for (const auto& step : o.step_outputs) {
    std::cout << " [";
    for (std::size_t k = 0; k < step.size(); ++k) std::cout << (k ? "," : "") << step[k];
    std::cout << "]";
  }
  std::cout << "\n";
}

void print_share(const OutputShare& s) {
  if (s.mode == OutputMode::accept) {
    std::cout << "client_share: " << s.accept_share << "\n";
    return;
  }
  std::cout << "client_share_steps:";
  for (const auto& step : s.step_shares) {
    std::cout << " [";
    for (std::size_t k = 0; k < step.size(); ++k) std::cout << (k ? "," : "") << step[k];
    std::cout << "]";
  }
  std::cout << "\n";
}

void print_meter(const CommMeter::Snapshot& s) {
  std::cout << "rounds_online: " << s.rounds_online << "\n"
            << "bytes_from_client: " << s.bytes_from_client << "\n"
            << "bytes_to_client: " << s.bytes_to_client << "\n"
            << "bytes_offline: " << s.bytes_offline << "\n"
            << "bytes_opening: " << s.bytes_opening << "\n";
}

int cmd_eval_plain(const std::string& fsm_path, const std::string& input_path,
                   const std::string& byte_map) {
  Fsm m = deserialize(read_file(fsm_path));
  auto input = load_input(input_path, byte_map);
  EvalResult r = evaluate_plain(m, input);
  std::cout << "final_state: " << r.final_state << "\n";
  if (m.output_mode == OutputMode::accept) {
    std::cout << "accept_bit: " << r.accept_bit << "\n";
  } else {
    std::cout << "step_outputs:";
    for (const auto& step : r.step_outputs) {
      std::cout << " [";
      for (std::size_t k = 0; k < step.size(); ++k) std::cout << (k ? "," : "") << step[k];
      std::cout << "]";
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_garble(const std::string& fsm_path, std::uint32_t n, const std::string& out_dir,
               std::uint32_t key_bits, std::uint32_t w_out, std::uint64_t seed, bool seeded) {
  Fsm m = deserialize(read_file(fsm_path));
  GarblingParams params = GarblingParams::for_machine(m, n, key_bits, w_out);
  SecureRng rng = seeded ? SecureRng(seed) : SecureRng();
  GarblingSecrets secrets = gen_secrets(m, params, rng);
  GarbledFsm garbled = garble(m, params, secrets);

  ByteWriter w;
  encode_matrices(w, garbled.matrices);
  write_file(out_dir + "/matrices.bin", w.take());

  nlohmann::json j;
  j["key_bits"] = params.key_bits;
  j["output_field_bytes"] = params.output_field_bytes;
  j["input_length"] = params.input_length;
  j["rotations"] = secrets.rotations;
  nlohmann::json keys = nlohmann::json::array();
  for (const auto& round : secrets.state_keys) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& k : round) row.push_back(to_hex(k));
    keys.push_back(row);
  }
  j["state_keys"] = keys;
  if (m.output_mode == OutputMode::accept)
    j["final_mask"] = secrets.final_mask;
  else
    j["step_masks"] = secrets.step_masks;
  j["initial_index"] = garbled.initial_index;
  j["initial_key"] = to_hex(garbled.initial_key);
  write_file(out_dir + "/secrets.json", j.dump(2));

  std::cout << "wrote " << out_dir << "/matrices.bin and " << out_dir << "/secrets.json\n";
  return 0;
}

int cmd_run(const std::string& protocol_name_in, const std::string& role_name_in,
            const std::string& listen, const std::string& connect,
            const std::string& connect_helper, const std::string& fsm_path,
            const std::string& input_path, const std::string& byte_map,
            const std::string& params_path, const std::string& open_to_name,
            std::uint64_t seed, bool seeded) {
  const Protocol protocol =
      protocol_name_in == "3pc" ? Protocol::three_party : Protocol::two_party;
  OpenTo open_to = OpenTo::none;
  if (open_to_name == "client") open_to = OpenTo::client;
  else if (open_to_name == "server") open_to = OpenTo::server;

  SecureRng rng = seeded ? SecureRng(seed) : SecureRng();
  CommMeter meter;

  auto meter_channel = [&meter](Channel& ch, Role local, Role peer) {
    ch.set_roles(local, peer);
    ch.attach_meter(&meter, true);
  };

  if (role_name_in == "client") {
    if (params_path.empty()) fail(Errc::parse, "client needs --params");
    SessionParams params = params_from_json(nlohmann::json::parse(read_file(params_path)));
    auto input = load_input(input_path, byte_map);
    auto [host, port] = parse_hostport(connect);
    auto server_ch = SocketChannel::connect(host, port);
    meter_channel(*server_ch, Role::client, Role::server);

    ClientOutcome out;
    if (protocol == Protocol::two_party) {
      out = drive_client_2pc(*server_ch, input, params, open_to, rng);
    } else {
      auto [hhost, hport] = parse_hostport(connect_helper);
      auto helper_ch = SocketChannel::connect(hhost, hport);
      meter_channel(*helper_ch, Role::client, Role::helper);
      out = drive_client_3pc(*server_ch, *helper_ch, input, params, open_to, rng);
    }
    if (out.opened) print_opened(*out.opened);
    else print_share(out.share);
    print_meter(meter.snapshot());
    return 0;
  }

  if (role_name_in == "server") {
    if (fsm_path.empty() || params_path.empty()) fail(Errc::parse, "server needs --fsm and --params");
    Fsm machine = deserialize(read_file(fsm_path));
    SessionParams params = params_from_json(nlohmann::json::parse(read_file(params_path)));
    auto [host, port] = parse_hostport(listen);
    SocketListener listener(host, port);
    std::cout << "listening on " << host << ":" << listener.port() << "\n";

    ServerOutcome out;
    if (protocol == Protocol::two_party) {
      auto client_ch = listener.accept();
      meter_channel(*client_ch, Role::server, Role::client);
      out = drive_server_2pc(*client_ch, machine, params, open_to, rng);
    } else {
      auto [hhost, hport] = parse_hostport(connect_helper);
      auto helper_ch = SocketChannel::connect(hhost, hport);
      meter_channel(*helper_ch, Role::server, Role::helper);
      auto client_ch = listener.accept();
      meter_channel(*client_ch, Role::server, Role::client);
      out = drive_server_3pc(*client_ch, *helper_ch, machine, params, open_to, rng);
    }
    if (out.opened) print_opened(*out.opened);
    else std::cout << "server share retained (open-to=" << open_to_name << ")\n";
    print_meter(meter.snapshot());
    return 0;
  }

  if (role_name_in == "helper") {
    if (protocol != Protocol::three_party) fail(Errc::parse, "helper role exists only in 3pc");
    auto [host, port] = parse_hostport(listen);
    SocketListener listener(host, port);
    std::cout << "listening on " << host << ":" << listener.port() << "\n";

    // The server connects first (it pushes the offline setup); the client
    // arrives second. Identify each peer by its first frame.
    auto first_ch = listener.accept();
    Frame first = first_ch->recv();
    std::unique_ptr<SocketChannel> server_ch, client_ch;
    Frame setup_frame, share_frame;
    if (first.type == MsgType::offline_setup) {
      server_ch = std::move(first_ch);
      setup_frame = std::move(first);
      client_ch = listener.accept();
      share_frame = client_ch->recv();
    } else if (first.type == MsgType::share_half) {
      client_ch = std::move(first_ch);
      share_frame = std::move(first);
      server_ch = listener.accept();
      setup_frame = server_ch->recv();
      if (setup_frame.type != MsgType::offline_setup)
        fail(Errc::protocol_failure, "expected offline setup from the server");
    } else {
      fail(Errc::protocol_failure, "unexpected first frame at helper");
    }
    if (share_frame.type != MsgType::share_half)
      fail(Errc::protocol_failure, "expected a share half from the client");
    meter_channel(*server_ch, Role::helper, Role::server);
    meter_channel(*client_ch, Role::helper, Role::client);
    meter.on_recv(Role::helper, setup_frame.type == MsgType::offline_setup ? Role::server
                                                                           : Role::client,
                  setup_frame.type, setup_frame.framed_size(), 0, true);
    meter.on_recv(Role::helper, Role::client, share_frame.type, share_frame.framed_size(), 0,
                  true);

    OfflineSetup setup_msg = decode_offline_setup(setup_frame.payload);
    HelperSetup setup{std::move(setup_msg.mask_key), std::move(setup_msg.matrices)};
    PartialReplyMsg reply = helper_partial_reply(setup, decode_share_half(share_frame.payload));
    client_ch->send({MsgType::partial_reply, encode_partial_reply(reply)});
    std::cout << "helper done\n";
    print_meter(meter.snapshot());
    return 0;
  }

  fail(Errc::parse, "role must be client, server or helper");
}

int cmd_bench(const std::string& grid_spec, std::uint64_t seed, const std::string& out_path) {
  GridSpec grid = parse_grid(grid_spec);
  for (std::uint32_t kb : grid.key_bits)
    if (kb < 1024 && !paillier::insecure_small_keys_allowed()) {
      // Desk-scale benchmarking runs on test keys by design.
      setenv("OBLIFSM_INSECURE_SMALL_KEYS", "1", 0);
      std::cerr << "note: enabling OBLIFSM_INSECURE_SMALL_KEYS for benchmark keys\n";
      break;
    }
  BenchReport report = bench_scaling(grid, seed);
  if (out_path.empty() || out_path == "-") {
    write_csv(report, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) fail(Errc::parse, "cannot write " + out_path);
    write_csv(report, out);
    std::cout << "wrote " << report.rows.size() << " rows to " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oblivious finite-state-machine evaluation"};
  app.require_subcommand(1);

  std::string fsm_path, input_path, byte_map, out_dir, params_path;
  std::uint32_t n = 0, key_bits = 128, w_out = 1, he_bits = 2048;
  std::uint64_t seed = 0;

  auto* eval = app.add_subcommand("eval-plain", "Evaluate a machine in the clear");
  eval->add_option("--fsm", fsm_path, "FSM JSON file")->required();
  eval->add_option("--input", input_path, "input file (comma-separated symbols)")->required();
  eval->add_option("--byte-map", byte_map, "treat input as raw bytes via this 256-entry map");

  auto* garble_cmd = app.add_subcommand("garble", "Garble a machine offline");
  garble_cmd->add_option("--fsm", fsm_path, "FSM JSON file")->required();
  garble_cmd->add_option("--n", n, "input length to garble for")->required();
  garble_cmd->add_option("--out", out_dir, "output directory")->required();
  garble_cmd->add_option("--key-bits", key_bits, "garbling key bits (default 128)");
  garble_cmd->add_option("--w-out", w_out, "output field bytes (default 1)");
  auto* gseed = garble_cmd->add_option("--seed", seed, "deterministic RNG seed");

  auto* params_cmd = app.add_subcommand("params", "Derive the public session parameters");
  params_cmd->add_option("--fsm", fsm_path, "FSM JSON file")->required();
  params_cmd->add_option("--n", n, "input length")->required();
  params_cmd->add_option("--he-bits", he_bits, "HE key bits (default 2048)");
  params_cmd->add_option("--key-bits", key_bits, "garbling key bits (default 128)");
  params_cmd->add_option("--w-out", w_out, "output field bytes (default 1)");
  params_cmd->add_option("--out", out_dir, "output file (default stdout)");

  std::string protocol_name_in = "2pc", role_name_in, listen, connect, connect_helper,
              open_to_name = "none";
  auto* run = app.add_subcommand("run", "Run one protocol role");
  run->add_option("--protocol", protocol_name_in, "2pc or 3pc")
      ->check(CLI::IsMember({"2pc", "3pc"}));
  run->add_option("--role", role_name_in, "client, server or helper")
      ->required()
      ->check(CLI::IsMember({"client", "server", "helper"}));
  run->add_option("--listen", listen, "HOST:PORT to listen on (server, helper)");
  run->add_option("--connect", connect, "server HOST:PORT to connect to (client)");
  run->add_option("--connect-helper", connect_helper,
                  "helper HOST:PORT to connect to (client, 3pc server)");
  run->add_option("--fsm", fsm_path, "FSM JSON file (server)");
  run->add_option("--input", input_path, "input file (client)");
  run->add_option("--byte-map", byte_map, "raw-byte input mapping (client)");
  run->add_option("--params", params_path, "public session parameters JSON");
  run->add_option("--open-to", open_to_name, "who learns the output")
      ->check(CLI::IsMember({"client", "server", "none"}));
  auto* rseed = run->add_option("--seed", seed, "deterministic RNG seed");

  std::string grid_spec, report_path;
  auto* bench = app.add_subcommand("bench", "Communication/round scaling benchmark");
  bench->add_option("--grid", grid_spec,
                    "grid, e.g. protocol=2pc,3pc;n=16,32;sigma=8,16;q=8,16;key_bits=512");
  bench->add_option("--seed", seed, "RNG seed (default 0)");
  bench->add_option("--out", report_path, "CSV output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval->parsed()) return cmd_eval_plain(fsm_path, input_path, byte_map);
    if (garble_cmd->parsed())
      return cmd_garble(fsm_path, n, out_dir, key_bits, w_out, seed, gseed->count() > 0);
    if (params_cmd->parsed()) {
      Fsm m = deserialize(read_file(fsm_path));
      SessionParams p = SessionParams::for_machine(m, n, he_bits, key_bits, w_out);
      std::string text = params_to_json(p).dump(2);
      if (out_dir.empty()) std::cout << text << "\n";
      else write_file(out_dir, text + "\n");
      return 0;
    }
    if (run->parsed())
      return cmd_run(protocol_name_in, role_name_in, listen, connect, connect_helper, fsm_path,
                     input_path, byte_map, params_path, open_to_name, seed, rseed->count() > 0);
    if (bench->parsed()) return cmd_bench(grid_spec, seed, report_path);
  } catch (const oblifsm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
