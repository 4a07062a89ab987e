from typing import Any, Dict


def get_discount(item: Dict[str, Any]) -> int:
  if "price" in item:
    discount = item["price"] * 0.15
    return item["price"] - discount
