"""Regenerate src/canrev/data/default_recipe.txt from the table below."""
from pathlib import Path

from canrev.dbcio import MessageDefinition, SignalDefinition, write_dbc
from canrev.model import Endianness

B, L = Endianness.BIG, Endianness.LITTLE

# name: (id, rate_hz, [(signal, msb, length, order, signed, scale, offset, unit, generator)])
MESSAGES = {
    "ENGINE": (0x0C0, 50, [
        ("RPM", 0, 16, B, False, 0.25, 0, "rpm", "sine center=2500 amplitude=1500 period=17"),
        ("THROTTLE", 16, 8, B, False, 0.4, 0, "%", "ramp lo=0 hi=100 period=11"),
        ("COOLANT", 24, 8, B, False, 1, -40, "degC", "random-walk lo=60 hi=110 step=0.3 start=85"),
        ("ALIVE", 60, 4, B, False, 1, 0, "", "counter step=1"),
    ]),
    "WHEELS": (0x1A0, 50, [
        ("WHEEL_FL", 8, 16, L, False, 0.01, 0, "km/h", "sine center=80 amplitude=60 period=23"),
        ("WHEEL_FR", 24, 16, L, False, 0.01, 0, "km/h", "sine center=80 amplitude=58 period=29 phase=1"),
        ("WHEEL_RL", 40, 16, L, False, 0.01, 0, "km/h", "random-walk lo=20 hi=140 step=0.4 start=80"),
    ]),
    "BODY": (0x2B0, 50, [
        ("GEAR", 0, 3, B, False, 1, 0, "", "categorical values=0|1|2|3|4|5 dwell=3"),
        ("DOOR_FL", 3, 1, B, False, 1, 0, "", "categorical values=0|1 dwell=6"),
        ("DOOR_FR", 4, 1, B, False, 1, 0, "", "categorical values=0|1 dwell=7"),
        ("BRAKE_PRESSURE", 5, 11, B, False, 0.1, 0, "bar", "random-walk lo=0 hi=200 step=0.8 start=60"),
        ("TEMP_DELTA", 16, 8, B, True, 0.5, 0, "degC", "sine amplitude=15 period=13"),
        ("ACCEL_LAT", 24, 12, B, True, 0.01, 0, "m/s2", "sine amplitude=5 period=7"),
        ("YAW_RATE", 36, 12, B, True, 0.1, 0, "deg/s", "random-walk lo=-60 hi=60 step=0.5 start=0"),
    ]),
    "BATTERY": (0x3C0, 50, [
        ("CURRENT", 8, 16, L, True, 0.01, 0, "A", "sine amplitude=40 period=19"),
        ("VOLTAGE", 28, 12, L, False, 0.01, 0, "V", "sine center=13.5 amplitude=1 period=31"),
        ("CHARGING", 32, 1, B, False, 1, 0, "", "categorical values=0|1 dwell=8"),
        ("SOC", 33, 7, B, False, 1, 0, "%", "ramp lo=20 hi=90 period=37"),
    ]),
    "CLIMATE": (0x420, 50, [
        ("CABIN_TEMP", 0, 10, B, False, 0.1, -20, "degC", "sine center=22 amplitude=6 period=27"),
        ("OUTSIDE_TEMP", 10, 9, B, True, 0.25, 0, "degC", "random-walk lo=-20 hi=20 step=0.3 start=0"),
        ("AC_ON", 19, 1, B, False, 1, 0, "", "categorical values=0|1 dwell=9"),
        ("HUMIDITY", 20, 7, B, False, 1, 0, "%", "ramp lo=30 hi=80 period=21"),
        ("FAN", 27, 5, B, False, 1, 0, "", "ramp lo=0 hi=31 period=15"),
    ]),
    "STEERING": (0x4F0, 50, [
        ("ANGLE", 8, 16, L, True, 0.1, 0, "deg", "sine amplitude=200 period=9"),
        ("TORQUE", 30, 10, L, True, 0.05, 0, "Nm", "sine amplitude=7 period=5 phase=0.5"),
    ]),
    "DRIVETRAIN": (0x5A0, 50, [
        ("SPEED", 3, 13, B, False, 0.05, 0, "km/h", "random-walk lo=0 hi=180 step=0.6 start=60"),
        ("ODOMETER", 16, 16, B, False, 1, 0, "m", "ramp lo=0 hi=60000 period=200"),
        ("CRUISE", 32, 1, B, False, 1, 0, "", "categorical values=0|1 dwell=10"),
        ("LONG_ACCEL", 33, 14, B, True, 0.001, 0, "m/s2", "sine amplitude=3 period=12"),
    ]),
    "STATUS": (0x6B0, 50, [
        ("MODE", 0, 2, B, False, 1, 0, "", "ramp lo=0 hi=3 period=16"),
        ("LIGHT", 2, 5, B, False, 1, 0, "", "sine center=15 amplitude=14 period=10"),
        ("PRESSURE", 26, 14, L, False, 0.1, 0, "kPa", "sine center=800 amplitude=300 period=25"),
        ("OIL_LEVEL", 32, 8, B, False, 0.5, 0, "%", "random-walk lo=20 hi=100 step=0.4 start=60"),
    ]),
}

DIDS = [
    ("ENGINE", "RPM", "ENGINE_RPM", "rpm", 1, 0, 5, 0),
    ("DRIVETRAIN", "SPEED", "VEHICLE_SPEED", "km/h", 1, 0, 5, 0),
    ("ENGINE", "THROTTLE", "THROTTLE_POSITION", "%", 1, 0, 5, 0),
]


def build() -> str:
    msgs, gens, rates = [], [], []
    seed = 1
    for name, (ident, rate, sigs) in MESSAGES.items():
        defs = []
        for sname, msb, length, e, signed, scale, offset, unit, gen in sigs:
            defs.append(SignalDefinition(sname, msb, length, e, signed, scale, offset, unit))
            gens.append(f"GEN_ {name} {sname} {gen} {seed}")
            seed += 1
        msgs.append(MessageDefinition(ident, name, 8, tuple(defs)))
        rates.append(f"RATE_ {name} {rate}")
    lines = [write_dbc(msgs, "canrev default corpus").rstrip("\n"), ""]
    lines += ["DURATION_ 40", ""] + rates + [""] + gens + [""]
    lines += [f"DID_ {' '.join(str(x) for x in d)}" for d in DIDS]
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "canrev" / "data" / "default_recipe.txt"
    out.write_text(build())
    print(f"wrote {out}")
