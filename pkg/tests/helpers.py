from asmflat import parse


def model_text(signature: str, main: str, init: str = "", macros: str = "", name: str = "t") -> str:
    return (f"asm {name}\n\nsignature:\n{signature}\n\ndefinitions:\n{macros}\n"
            f"  main rule r_main =\n{main}\n\ninit:\n{init}\n")


def make(signature: str, main: str, init: str = "", macros: str = ""):
    return parse(model_text(signature, main, init, macros))
