#include "anaflow/prompts.hpp"

namespace anaflow {

namespace {

constexpr std::string_view kSystem = "You are an analog integrated circuits expert.";

constexpr std::string_view kBasic = R"(You aim to design a topology for a given circuit described in the text.

Please ensure your designed circuit topology works properly and achieves the design requirements.

Here is an example:

## Question

Design a 2-stage amplifier (first stage: a common-source stage with current-source load, second stage: a common-source stage with resistor load).

Input node name: Vin, Vbias.

Output node name: Vout.

## Answer

### Task 1

#### Components Needed

- **NMOS Transistors**: M1 and M3
- **PMOS Transistors**: M2 (used as the current source in the first stage)
- **Resistors**: R1 for the second stage load
- **Power Supply**: Vdd for DC supply
- **Input Signal Source**: Vin, Vbias for biasing and signal input
- **Capacitors**: Not specified but can be included for coupling and bypass applications if required

#### Stage 1: Common-Source Amplifier with Current Source Load

1. **Transistor Setup**:
   - **M1** (NMOS) as the main amplifying transistor.
   - Gate of **M1** is connected to the input node **Vin**.
   - Source of **M1** connected to the ground.
   - Drain of **M1** connected to the drain of **M2**.
2. **Biasing**:
   - **Vin** provides the input signal.
   - **Vbias** is used to bias **M2** (PMOS), ensuring it operates as a current source.
3. **Current Source Load (M2)**:
   - **M2**, a PMOS transistor, is configured as a current source.
   - The source of **M2** is connected to **Vdd**, and its gate is connected to **Vbias**.
   - Drain of **M2** is connected to the drain of **M1**, providing a high-impedance load.

#### Stage 2: Common-Source Amplifier with Resistor Load

1. **Transistor Setup**:
   - **M3** (NMOS) as the main amplifying transistor for the second stage.
   - Gate of **M3** connected to the drain of **M1**.
   - Source of **M3** connected to the ground.
   - Drain of **M3** connected to **Vout** through resistor **R1**.
2. **Load and Coupling**:
   - **R1** connects the drain of **M3** to **Vdd**. This resistor converts the current through **M3** into an output voltage.

### Task 2

```
* Two-Stage Amplifier

* Define the MOSFET models
.model nmos_model nmos level=1 kp=100e-6 vto=0.5
.model pmos_model pmos level=1 kp=50e-6 vto=-0.5

* Power Supplies for the power and input signal
Vdd Vdd 0 5.0
Vin Vin 0 1.0
Vbias Vbias 0 4.0

* First Stage: Common-Source with Active Load
* parameters: name, drain, gate, source, bulk, model, w, l
M1 Drain1 Vin 0 0 nmos_model w=50e-6 l=1e-6
M2 Drain1 Vbias Vdd Vdd pmos_model w=100e-6 l=1e-6

* Second Stage: Common-Source with Resistor Load
M3 Vout Drain1 0 0 nmos_model w=100e-6 l=1e-6
R1 Vout Vdd 1k

.end
```

As you have seen, the output of your designed topology should consist of two tasks:

1. Give a detailed design plan about all devices and their interconnectivity nodes and properties.
2. Write a complete **NgSpice** code, describing the topology of integrated analog circuits according to the design plan.

Please give the runnable code without any placeholders.

Do not write other redundant codes after **`.end`**.

## Tips

There are some tips you should remember all the time:

1. For the MOSFET definition `Mname drain gate source bulk model w=w1 l=l1`, be careful about the parameter sequence.
2. You should connect the bulk of a MOSFET to its source.
3. Please use the MOSFET threshold voltage, when setting the bias voltage.
4. Avoid giving any AC voltage in the sources, just consider the operating points.
5. Make sure the input and output node names appear in the circuit.
6. Avoid using subcircuits.
7. Use nominal transistor sizing.
8. Assume the Vdd = 5.0 V.

## Question

Design [TASK].

Input node name: [INPUT].

Output node name: [OUTPUT].

## Answer
)";

constexpr std::string_view kRetrieval = R"(I have the following implemented subcircuits you can directly call them by NgSpice code, we list all basic information on them.

[TABLE]

Now, you need to design [TASK]. Please maximize the design success rate, thus the circuit with two inputs and the highest possible gain has greater flexibility. Please choose the subcircuits from the above table you will use and make the number of chosen subcircuits as few as possible.

Please give out the IDs of the subcircuits that you choose, and enumerate them in a Python list like `[0]`.
)";

constexpr std::string_view kComposite = R"(You aim to design a topology for a given circuit described in the text.
Please ensure your designed circuit topology works properly and achieves the design requirements.
To make the task easier, I provide you with some existing subcircuits you can directly use by calling them in NgSpice code.
Now I would like you to help me design a complex analog circuit based on them.

Here is an example:

## Question

Design an opamp with 470 ohm resistance load.

Input node name: in

Output node name: out

You can directly use the following subcircuits.

### Subcircuits Info

| Id | Circuit Type | Gain/Differential-mode gain | Common-mode gain | Input | Output |
|----|--------------|-----------------------------|------------------|-------|--------|
| - | Opamp | 10.00e0 | 0.00e0 | Vin | Vout |

### Call Info

To use them, please insert the following codes.

```
* declare the subcircuit
.include example_lib.sp
* create a subcircuit instance
X1 Vin Vout BasicOperationalAmplifier
```

## Answer

```
* Operational Amplifier
.include example_lib.sp

* Define the MOSFET models
.model nmos_model nmos level=1 kp=100e-6 vto=0.5
.model pmos_model pmos level=1 kp=50e-6 vto=-0.5

Vinput in 0 2.5
Xop in 0 out BasicOperationalAmplifier
Rload out 0 470

.end
```

As you have seen, the output of your designed topology should be in a complete NgSpice code, describing the topology of integrated analog circuits according to the design plan.

Please give the runnable code without any placeholders.
Do not write other redundant codes after `.end`.

1. For the MOSFET definition `Mname drain gate source bulk model w=w1 l=l1`, be careful about the parameter sequence.
2. You should connect the bulk of a MOSFET to its source.
3. Please use the MOSFET threshold voltage when setting the bias voltage.
4. Avoid giving any AC voltage in the sources, just consider the operating points.
5. Make sure the input and output node names appear in the circuit.
6. Assume the Vdd = 5.0 V. Do not need to add the power supply for subcircuits.

## Question

Design [TASK].

Input node name: [INPUT].

Output node name: [OUTPUT].

You can directly use the following subcircuits.

### Subcircuits Info

[SUBCIRCUITS_INFO]

### Note

[NOTE_INFO]

### Call Info

To use them, please insert the following codes.

[CALL_INFO]

## Answer
)";

}  // namespace

std::string_view system_prompt() { return kSystem; }
std::string_view basic_template() { return kBasic; }
std::string_view retrieval_template() { return kRetrieval; }
std::string_view composite_template() { return kComposite; }

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find('[', pos);
        if (open == std::string_view::npos) break;
        const auto close = tmpl.find(']', open + 1);
        if (close == std::string_view::npos) break;
        out.append(tmpl.substr(pos, open - pos));
        const std::string key(tmpl.substr(open + 1, close - open - 1));
        if (auto it = values.find(key); it != values.end()) {
            out.append(it->second);
        } else {
            out.append(tmpl.substr(open, close - open + 1));
        }
        pos = close + 1;
    }
    out.append(tmpl.substr(pos));
    return out;
}

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) out += ", ";
        out += n;
    }
    return out;
}

}  // namespace anaflow
