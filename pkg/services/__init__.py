"""
Численные модули: специальные функции, арифметика, ряды Эйзенштейна,
данные форм Мааса, L-функции, контурные интегралы и моменты.
"""
