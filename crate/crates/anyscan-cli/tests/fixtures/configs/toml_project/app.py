def g(y: str) -> str:
    return y
